#!/usr/bin/env python3
"""Generate the demonstration world fixture (fixtures/world.json).

Four fact families back the four demo rules. Frequencies follow a
Zipf-like 1000/rank schedule per value pool so likelihood ranking has
real spread to separate.
"""
import json
from pathlib import Path

facts = []
types = {}
freqs = {}


def add_value(name, ty, rank):
    types[name] = ty
    freqs[name] = round(1000.0 / rank, 6)


def add_placeholder(name, ty):
    types[name] = ty
    freqs[name] = 1000.0


# ---------------------------------------------------------------- rule 1
allergens = [
    "peanut", "milk", "egg", "wheat", "soy", "shellfish",
    "sesame", "almond", "mustard", "celery", "lupin", "buckwheat",
    "walnut", "oat",
]
ingredient_forms = ["{} paste", "{} extract"]
dish_forms = ["{} tart", "{} stew", "{} dumpling", "{} pie"]

add_placeholder("Person X", "Person")
for rank, allergen in enumerate(allergens, start=1):
    add_value(allergen, "Food allergen", rank)
    facts.append(["is_allergic_to", "Person X", allergen])

ing_rank = 0
for allergen in allergens:
    for form in ingredient_forms:
        ing_rank += 1
        ingredient = form.format(allergen)
        add_value(ingredient, "Ingredient", ing_rank)
        facts.append(["is_one_type_of", ingredient, allergen])
        for dish_form in dish_forms:
            dish = dish_form.format(ingredient)
            add_value(dish, "Dish", len([t for t in types.values() if t == "Dish"]) + 1)
            facts.append(["is_ingredient_in", ingredient, dish])

# ---------------------------------------------------------------- rule 2
continents = ["North America", "South America", "Europe", "Asia", "Africa", "Oceania"]
region_stems = [
    "Great Lakes", "Hudson Valley", "Sonoran", "Yukon", "Appalachian",
    "Tarapaca", "Pampas", "Altiplano", "Gran Chaco", "Patagonian",
    "Rhineland", "Alpine", "Baltic", "Iberian", "Carpathian",
    "Mekong Delta", "Deccan", "Gobi Corridor", "Malay", "Siberian",
    "Sahel", "Maghreb", "Great Rift", "Kalahari", "Swahili Coast",
    "Outback", "Tasman", "Fiordland", "Coral Coast", "Nullarbor",
    "Loire Valley", "Anatolian", "Horn of Africa", "Yucatan", "Basque Country",
    "Levantine",
]
for rank, continent in enumerate(continents, start=1):
    add_value(continent, "Continent", rank)
add_placeholder("Organization X", "Organization")
for rank, stem in enumerate(region_stems, start=1):
    region = f"{stem} Region"
    add_value(region, "Region", rank)
    facts.append(["has_branch_in", "Organization X", region])
    facts.append(["is_part_of", region, continents[(rank - 1) % len(continents)]])

# ---------------------------------------------------------------- rule 3
periods = [
    "Paleolithic Era", "Neolithic Era", "Bronze Age", "Iron Age",
    "Classical Antiquity", "Early Middle Ages", "High Middle Ages",
    "Renaissance", "Enlightenment Era", "Industrial Era",
    "Modern Era", "Information Age",
]
landmarks = [
    "Notre Dame de Paris", "Belem Tower", "Lion Gate of Mycenae", "Pont du Gard",
    "Hagia Sophia", "Alhambra Palace", "Charles Bridge", "Forbidden City",
    "Machu Picchu Citadel", "Taj Mahal", "Brandenburg Gate", "Eiffel Tower",
    "Tower Bridge", "Sagrada Familia", "Empire State Building", "Golden Gate Bridge",
    "Sydney Opera House", "CN Tower", "Louvre Pyramid", "Channel Tunnel",
    "Petronas Towers", "Millau Viaduct", "Burj Khalifa", "Shard of London",
    "Gateway Arch", "Space Needle", "Atomium Hall", "Habitat 67",
    "Marina Bay Sands", "Helix Bridge", "Aqua Tower", "Bosco Verticale",
    "Lotus Temple", "Niteroi Museum", "Oriental Pearl Tower", "Sky Tree of Tokyo",
]
add_placeholder("Plant X", "Plant")
for rank, period in enumerate(periods, start=1):
    add_value(period, "Time Period", rank)
    facts.append(["vanished_in", "Plant X", period])
for i, earlier in enumerate(periods):
    for later in periods[i + 1:]:
        facts.append(["is_earlier_than", earlier, later])
for rank, landmark in enumerate(landmarks, start=1):
    add_value(landmark, "Landmark", rank)
    # Landmarks are built from the Iron Age onward, cycling.
    period = periods[3 + (rank - 1) % (len(periods) - 3)]
    facts.append(["was_built_in", landmark, period])

# ---------------------------------------------------------------- rule 4 (reverse search)
ages = [
    "4 years", "6 years", "8 years", "10 years", "12 years",
    "14 years", "16 years", "18 years", "21 years", "25 years",
]
machines = [
    ("scooter", "8 years"), ("go kart", "10 years"), ("lawn mower", "12 years"),
    ("moped", "14 years"), ("farm tractor", "16 years"), ("motorcycle", "16 years"),
    ("forklift", "18 years"), ("road roller", "18 years"), ("tower crane", "21 years"),
    ("excavator", "18 years"), ("combine harvester", "21 years"), ("bulldozer", "25 years"),
]
for rank, age in enumerate(ages, start=1):
    add_value(age, "Age", rank)
    facts.append(["is_of_age", "Person X", age])
for i, younger in enumerate(ages):
    for older in ages[i + 1:]:
        facts.append(["is_smaller_than", younger, older])
for rank, (machine, min_age) in enumerate(machines, start=1):
    add_value(machine, "Machine", rank)
    facts.append(["requires_a_minimal_age_of", machine, min_age])

# ---------------------------------------------------------------- rule 5
instruments = [
    "piccolo", "flute", "clarinet", "oboe", "violin", "trumpet", "viola",
    "pandeiro", "guitar", "banjo", "cello", "dhak", "timpani", "marimba",
    "harp", "double bass", "tuba", "upright piano",
]
add_placeholder("Bag X", "Bag")
for rank, instrument in enumerate(instruments, start=1):
    add_value(instrument, "Instrument", rank)
    facts.append(["has_trouble_containing", "Bag X", instrument])
for i, smaller in enumerate(instruments):
    for bigger in instruments[i + 1:]:
        facts.append(["is_larger_than", bigger, smaller])

doc = {"facts": facts, "types": types, "frequencies": freqs}
out = Path(__file__).resolve().parent.parent / "fixtures" / "world.json"
out.parent.mkdir(exist_ok=True)
out.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
print(f"{len(facts)} facts, {len(types)} typed values -> {out}")
