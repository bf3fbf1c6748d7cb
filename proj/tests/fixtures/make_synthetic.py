"""Regenerates tests/fixtures/synthetic. Output is fully determined by SEED."""

import random
from pathlib import Path

SEED = 20240601
N_USERS = 60
N_PRODUCTS = 40
OUT = Path(__file__).parent / "synthetic"

GENDERS = ["M", "F"]
AGES = ["Under 18", "18-24", "25-34", "35-44", "45-49", "50-55", "56+"]


def main() -> None:
    rng = random.Random(SEED)
    OUT.mkdir(exist_ok=True)
    products = [f"m{i:02d}" for i in range(1, N_PRODUCTS + 1)]
    # Two products never make it into the KG.
    in_kg = products[:-2]

    triples = []
    for p in in_kg:
        triples.append((p, "directed_by", f"d{rng.randrange(12):02d}"))
        for g in rng.sample(range(8), rng.choice([1, 1, 2])):
            triples.append((p, "genre", f"g{g}"))
        for a in rng.sample(range(20), 2):
            triples.append((p, "starring", f"a{a:02d}"))
    triples.append((in_kg[0], "award", "w0"))
    triples.append(("d00", "born_in", "c0"))
    triples.append((in_kg[1], "sequel_of", in_kg[2]))
    triples.append(triples[0])

    types = [(p, "movie") for p in products]
    types += [(f"d{i:02d}", "director") for i in range(12)]
    types += [(f"g{i}", "genre") for i in range(8)]
    types += [(f"a{i:02d}", "actor") for i in range(20)]
    types += [("w0", "award"), ("c0", "country")]

    weights = [1.0 / (1 + i) ** 0.8 for i in range(N_PRODUCTS)]
    interactions = []
    for u in range(1, N_USERS + 1):
        n = rng.randint(8, 24)
        chosen = set()
        while len(chosen) < n:
            chosen.add(rng.choices(products, weights)[0])
        t = 900_000_000 + rng.randrange(1_000_000)
        for p in sorted(chosen, key=lambda _: rng.random()):
            t += rng.choice([0, 60, 3600, 86400])
            interactions.append((f"u{u:02d}", p, rng.randint(1, 5), t))

    users = []
    for u in range(1, N_USERS + 1):
        gender = rng.choice(GENDERS)
        age = rng.choice(AGES)
        if u % 20 == 7:
            age = "NA"
        users.append((f"u{u:02d}", gender, age))

    providers = [f"s{i}" for i in range(10)]
    product_providers = [(p, rng.choice(providers)) for p in products]
    provider_attrs = [(s, rng.choice(GENDERS), rng.choice(AGES)) for s in providers]

    def write(name, rows):
        with open(OUT / name, "w") as f:
            for r in rows:
                f.write("\t".join(str(x) for x in r) + "\n")

    write("interactions.tsv", interactions)
    write("kg_triples.tsv", triples)
    write("entity_types.tsv", types)
    write("user_attributes.tsv", users)
    write("product_providers.tsv", product_providers)
    write("provider_attributes.tsv", provider_attrs)


if __name__ == "__main__":
    main()
