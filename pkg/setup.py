#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
DSGF - Setup de Instalação
Pacote, dependências e ponto de entrada da linha de comando
"""

from pathlib import Path

from setuptools import find_packages, setup

ROOT = Path(__file__).parent


def ler_dependencias(arquivo: str):
    """Lê um arquivo de requisitos ignorando comentários"""
    linhas = (ROOT / 'config' / arquivo).read_text(encoding='utf-8').splitlines()
    return [linha.strip() for linha in linhas if linha.strip() and not linha.startswith('#')]


setup(
    name='dsgf',
    version='1.0.0',
    description='Rastreador de estado de diálogo com fusão de grafo de esquema dinâmico',
    packages=find_packages(exclude=('tests', 'tests.*', 'examples', 'examples.*')),
    python_requires='>=3.8',
    install_requires=ler_dependencias('requirements.txt'),
    extras_require={'pretrained': ler_dependencias('requirements_ml.txt')},
    entry_points={'console_scripts': ['dsgf=dsgf.cli:main']},
)
