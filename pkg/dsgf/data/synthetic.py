#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
DSGF - Corpus Sintético
Esquema e diálogos pequenos, determinísticos, para testes e checagem de overfit
"""

import json
import random
from pathlib import Path
from typing import Dict, Any, List, Union

from ..core.logger import get_data_logger
from .schema import SchemaElement, domain, slot, dump_schema

logger = get_data_logger()

CITIES = ['vancouver', 'seattle', 'portland', 'denver', 'austin', 'chicago']
DATES = ['March 10th', 'March 11th', 'next Friday', 'tomorrow', 'Sunday']
CONDITIONS = ['sunny', 'rainy', 'cloudy', 'windy']
ATTRACTIONS = ['Bloedel Conservatory', 'Pike Market', 'City Museum', 'Rose Garden', 'Lake Park']
CATEGORIES = ['park', 'museum', 'garden']
RIDE_TYPES = ['pool', 'regular', 'luxury']
SEATS = ['1', '2', '3', '4']


def synthetic_schema(include_unseen: bool = False) -> List[SchemaElement]:
    """Esquema com clima, turismo e transporte (e hotéis, não vistos no treino)"""
    elements = [
        domain('Weather', 'check the weather forecast for a city'),
        slot('Weather', 'city', 'name of the city for the weather forecast'),
        slot('Weather', 'date', 'date for the weather forecast'),
        domain('Travel', 'find tourist attractions to visit'),
        slot('Travel', 'location', 'city where the attraction is located'),
        slot('Travel', 'category', 'type of the attraction', possible_values=CATEGORIES),
        domain('RideSharing', 'book a cab ride to a destination'),
        slot('RideSharing', 'destination', 'place the ride goes to'),
        slot('RideSharing', 'number_of_seats', 'number of seats to reserve', possible_values=SEATS),
        slot('RideSharing', 'ride_type', 'type of ride to book', possible_values=RIDE_TYPES),
    ]
    if include_unseen:
        elements += [
            domain('Hotels', 'reserve a room in a hotel'),
            slot('Hotels', 'location', 'city where the hotel is located'),
            slot('Hotels', 'stars', 'star rating of the hotel', possible_values=['3', '4', '5']),
        ]
    return elements


def _user(utterance: str, state: Dict[str, Dict[str, str]], services: List[str]) -> Dict[str, Any]:
    frames = [
        {'service': s, 'state': {'slot_values': {k: [v] for k, v in state.get(s, {}).items()}}}
        for s in services
    ]
    return {'speaker': 'USER', 'utterance': utterance, 'frames': frames}


def _system(utterance: str) -> Dict[str, Any]:
    return {'speaker': 'SYSTEM', 'utterance': utterance, 'frames': []}


def generate_dialogues(num_dialogues: int = 10, seed: int = 7) -> List[Dict[str, Any]]:
    """Gera diálogos no layout SGD com relações de co-referência e co-atualização"""
    rng = random.Random(seed)
    dialogues = []
    for number in range(num_dialogues):
        city = rng.choice(CITIES)
        date = rng.choice(DATES)
        attraction = rng.choice(ATTRACTIONS)
        category = rng.choice(CATEGORIES)
        ride_type = rng.choice(RIDE_TYPES)
        seats = rng.choice(SEATS)
        with_weather = number % 3 != 2
        services = (['Weather'] if with_weather else []) + ['Travel', 'RideSharing']
        state: Dict[str, Dict[str, str]] = {}
        turns = []

        if with_weather:
            state['Weather'] = {'city': city, 'date': date}
            turns.append(_user(f"What is the weather like in {city} on {date}?", state, services))
            turns.append(_system(f"It will be {rng.choice(CONDITIONS)} in {city} on {date}."))
            state = dict(state, Travel={'location': city})
            turns.append(_user("Any good attractions in town?", state, services))
        else:
            state['Travel'] = {'location': city, 'category': category}
            turns.append(_user(f"Find me a {category} to visit in {city}.", state, services))
        turns.append(_system(f"I have good options including {attraction}."))

        state = dict(state, RideSharing={'destination': attraction})
        turns.append(_user(f"Lovely! Can you book me a ride to {attraction}?", state, services))
        turns.append(_system("What kind of ride would you like, and for how many people?"))

        state = dict(state, RideSharing=dict(state['RideSharing'], ride_type=ride_type,
                                              number_of_seats=seats))
        turns.append(_user(f"Just a {ride_type} ride please, book for {seats}.", state, services))
        turns.append(_system(f"Confirming a {ride_type} cab to {attraction} for {seats}."))

        dialogues.append({'dialogue_id': f"synth_{number:03d}", 'services': services, 'turns': turns})
    return dialogues


def write_synthetic(out_dir: Union[str, Path], num_dialogues: int = 10, seed: int = 7,
                    include_unseen: bool = False) -> Dict[str, Path]:
    """Grava schema.json e dialogues.json no diretório dado"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    schema_path = out_dir / 'schema.json'
    corpus_path = out_dir / 'dialogues.json'
    dump_schema(synthetic_schema(include_unseen), schema_path)
    with open(corpus_path, 'w', encoding='utf-8') as arquivo:
        json.dump(generate_dialogues(num_dialogues, seed), arquivo, indent=2, ensure_ascii=False)
    logger.info(f"Corpus sintético ({num_dialogues} diálogos) gravado em {out_dir}")
    return {'schema': schema_path, 'corpus': corpus_path}
