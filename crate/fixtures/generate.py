"""Regenerates the recipe fixtures. Output is deterministic."""

import json
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent

PLACES = [
    ("Kigali", "GPE", "KB-G001", "RW", 1132686),
    ("Butare", "GPE", "KB-G002", "RW", 89600),
    ("Gisenyi", "GPE", "KB-G003", "RW", 83623),
    ("Ruhengeri", "GPE", "KB-G004", "RW", 86685),
    ("Kibuye", "GPE", "KB-G005", "RW", 48024),
    ("Nyungwe Forest", "LOC", "KB-L001", "RW", 0),
    ("Lake Kivu", "LOC", "KB-L002", "RW", 0),
    ("Bujumbura", "GPE", "KB-G006", "BI", 497166),
    ("Goma", "GPE", "KB-G007", "CD", 670000),
]
PEOPLE = [("Jean Uwimana", "KB-P001"), ("Marie Mukamana", "KB-P002"), ("Paul Habimana", "KB-P003")]
ORGS = [("Red Cross", "KB-O001"), ("World Food Programme", "KB-O002")]

# Per frame type: keywords with their affinity to the type label.
KEYWORDS = {
    "water": [("water", 0.97), ("wells", 0.86), ("drinking", 0.84), ("thirst", 0.62)],
    "food": [("food", 0.96), ("hunger", 0.9), ("rations", 0.85), ("harvest", 0.71)],
    "med": [("clinic", 0.9), ("cholera", 0.88), ("medicine", 0.93), ("doctors", 0.82)],
    "shelter": [("shelter", 0.95), ("tents", 0.87), ("homeless", 0.83)],
    "evac": [("evacuated", 0.94), ("fled", 0.81), ("evacuation", 0.96)],
    "infra": [("bridge", 0.89), ("roads", 0.86), ("collapsed", 0.74)],
    "crimeviolence": [("looting", 0.91), ("attacked", 0.86), ("violence", 0.95)],
}
NEIGHBORS = [
    ("water", "boreholes", 0.78),
    ("water", "thirst", 0.74),
    ("water", "rain", 0.52),
    ("food", "maize", 0.76),
    ("food", "rice", 0.69),
    ("clinic", "hospital", 0.83),
    ("shelter", "camps", 0.75),
    ("roads", "highway", 0.72),
]
EXTRA_AFFINITY = [
    ("boreholes", "water", 0.85),
    ("maize", "food", 0.82),
    ("hospital", "med", 0.91),
    ("camps", "shelter", 0.81),
    ("highway", "infra", 0.79),
    ("rain", "water", 0.7),
]
FILLER = [
    "residents said", "officials reported that", "according to local radio", "on Monday", "this week",
    "in the district", "near the market", "after heavy rains", "the situation remains tense", "volunteers arrived",
]
TEMPLATES = {
    "water": ["{p} has no clean {k} and families walk far to {k2} points", "the {k} supply in {p} is contaminated"],
    "food": ["{k} is running out in {p}", "families in {p} face {k} as {k2} fails"],
    "med": ["the {k} in {p} is overwhelmed", "an outbreak of {k} was confirmed near {p}"],
    "shelter": ["hundreds in {p} need {k}", "{k} were set up outside {p}"],
    "evac": ["villagers were {k} from {p}", "the {k} of {p} continued overnight"],
    "infra": ["the main {k} to {p} was destroyed", "{k} around {p} are impassable"],
    "crimeviolence": ["{k} was reported in {p}", "shops in {p} were {k}"],
}
NEUTRAL = [
    "the weather was cloudy in {p}",
    "{who} spoke to reporters in {p}",
    "the {org} office opened in {p}",
    "schools in {p} reopened",
    "{who} visited relatives",
]


def write_jsonl(path, rows):
    path.write_text("".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rows), encoding="utf-8")


def write_tsv(path, rows):
    path.write_text("".join("\t".join(str(c) for c in r) + "\n" for r in rows), encoding="utf-8")


def sentence(rng, ty, place):
    kws = [k for k, _ in KEYWORDS[ty]]
    t = rng.choice(TEMPLATES[ty])
    s = t.format(p=place, k=rng.choice(kws), k2=rng.choice(kws))
    if rng.random() < 0.5:
        s = rng.choice(FILLER) + " " + s
    return s[0].upper() + s[1:] + "."


def neutral(rng, place):
    s = rng.choice(NEUTRAL).format(p=place, who=rng.choice(PEOPLE)[0], org=rng.choice(ORGS)[0])
    return s[0].upper() + s[1:] + "."


def gazetteer_rows():
    rows = [(n, t, k) for n, t, k, _, _ in PLACES]
    rows += [(n, "PER", k) for n, k in PEOPLE]
    rows += [(n, "ORG", k) for n, k in ORGS]
    return rows


def sf_fixture(rng):
    out = ROOT / "sf"
    out.mkdir(exist_ok=True)
    types = sorted(KEYWORDS)
    genres = ["NW", "SN", "WL"]
    docs = []
    urgency = []
    for d in range(20):
        doc_id = f"SF{d:03d}"
        n_seg = rng.randint(2, 7)
        doc_types = rng.sample(types, rng.randint(1, 4))
        segs = []
        for _ in range(n_seg):
            place = rng.choice(PLACES)[0]
            if rng.random() < 0.3:
                segs.append(neutral(rng, place))
            else:
                segs.append(sentence(rng, rng.choice(doc_types), place))
        docs.append({"doc_id": doc_id, "genre": genres[d % 3], "segments": segs})
        if d % 4 == 0:
            urgency.append((doc_id, doc_types[0], "true"))
    write_jsonl(out / "corpus.jsonl", docs)

    labeled = []
    for d in range(40):
        doc_types = rng.sample(types, rng.randint(1, 2))
        segs = [sentence(rng, rng.choice(doc_types), rng.choice(PLACES)[0]) for _ in range(3)]
        segs.append(neutral(rng, rng.choice(PLACES)[0]))
        labeled.append({"doc_id": f"L{d:03d}", "segments": segs, "types": doc_types})
    write_jsonl(out / "labeled.jsonl", labeled)

    aff = [(k, ty, a) for ty, ks in KEYWORDS.items() for k, a in ks]
    aff += EXTRA_AFFINITY
    # A few cross-type affinities so filtering by type matters.
    aff += [("water", "food", 0.41), ("clinic", "shelter", 0.37), ("fled", "crimeviolence", 0.66)]
    write_tsv(out / "affinity.tsv", aff)
    write_tsv(out / "neighbors.tsv", NEIGHBORS)
    write_tsv(out / "gazetteer.tsv", gazetteer_rows())
    write_tsv(out / "urgency.tsv", urgency)
    (out / "sf.toml").write_text(
        """recipe = "sf"
seed = 13
corpus = "corpus.jsonl"

[tag]
gazetteer = "gazetteer.tsv"

[sf]
labeled = "labeled.jsonl"
affinity = "affinity.tsv"
neighbors = "neighbors.tsv"
urgency = "urgency.tsv"
th1 = 0.8
lambda = -1.5
topk = true
k_cap = 3
location_window = 1
""",
        encoding="utf-8",
    )


def ner_fixture(rng):
    out = ROOT / "ner"
    out.mkdir(exist_ok=True)
    genres = ["NW", "SN", "WL"]
    docs = []
    for d in range(12):
        segs = []
        for _ in range(rng.randint(3, 6)):
            place = rng.choice(PLACES)[0]
            # Misspelled place names exercise edit-distance propagation.
            if rng.random() < 0.15:
                place = place[:-1] + ("a" if place[-1] != "a" else "e")
            if rng.random() < 0.6:
                segs.append(sentence(rng, rng.choice(sorted(KEYWORDS)), place))
            else:
                segs.append(neutral(rng, place))
        docs.append({"doc_id": f"NER{d:03d}", "genre": genres[d % 3], "segments": segs})
    write_jsonl(out / "corpus.jsonl", docs)
    write_tsv(out / "gazetteer.tsv", gazetteer_rows())
    (out / "negatives.txt").write_text("The\nResidents\nOfficials\nAccording\n", encoding="utf-8")
    write_tsv(out / "terms.tsv", [("water", 5), ("food", 4), ("cholera", 3), ("flood", 2), ("evacuated", 2)])
    (out / "ner.toml").write_text(
        """recipe = "ner-data"
seed = 13
corpus = "corpus.jsonl"

[select]
terms = "terms.tsv"
budget = 40
genre_ratio = "NW=0.4,SN=0.3,WL=0.3"

[tag]
gazetteer = "gazetteer.tsv"
negatives = "negatives.txt"
window = 5
min_edit_dist = 2
negative_top_k = 50
""",
        encoding="utf-8",
    )


def edl_fixture(rng):
    out = ROOT / "edl"
    out.mkdir(exist_ok=True)
    # The incident-language side: surfaces are transliterated variants.
    il = {"Kigali": "Kigari", "Butare": "Butaare", "Lake Kivu": "Ikiyaga Kivu", "Red Cross": "Croix Rouge"}
    docs = []
    for d in range(8):
        segs = []
        for _ in range(4):
            name, ty, *_ = rng.choice(PLACES)
            surface = il.get(name, name)
            segs.append(f"Abantu benshi bari i {surface} uyu munsi.")
        segs.append(f"{rng.choice(PEOPLE)[0]} yavuze ko {rng.choice(ORGS)[0]} izafasha.")
        segs.append("Umuntu witwa Habineza Claude yageze i Nyamata.")
        docs.append({"doc_id": f"EDL{d:03d}", "genre": "NW", "segments": segs})
    write_jsonl(out / "corpus.jsonl", docs)
    gaz = gazetteer_rows() + [(v, t, "") for k, v in il.items() for n, t, *_ in [r for r in gazetteer_rows() if r[0] == k]]
    gaz += [("Habineza Claude", "PER", ""), ("Nyamata", "GPE", "")]
    write_tsv(out / "gazetteer.tsv", gaz)
    kb = [("kb_id", "type", "name", "ascii_name", "alternate_names", "country", "population")]
    for n, t, k, c, pop in PLACES:
        kb.append((k, t, n, n, "", c, pop))
    for n, k in PEOPLE:
        kb.append((k, "PER", n, n, "", "", 0))
    for n, k in ORGS:
        kb.append((k, "ORG", n, n, "Croix-Rouge" if "Cross" in n else "", "", 0))
    # Far-away small places are pruned.
    kb.append(("KB-G100", "GPE", "Smalltown", "Smalltown", "", "US", 49999))
    kb.append(("KB-G101", "GPE", "Bigcity", "Bigcity", "", "US", 50001))
    write_tsv(out / "kb.tsv", kb)
    write_tsv(
        out / "lexicon.tsv",
        [("Kigari", "Kigali", 0.9), ("Butaare", "Butare", 0.8), ("Ikiyaga", "Lake", 0.95), ("Croix", "Red", 0.6),
         ("Croix", "Cross", 0.5), ("Rouge", "Red", 0.7)],
    )
    write_tsv(out / "lexicon_pivot.tsv", [("Ikiyaga", "Lac", 0.9), ("Rouge", "Rouge", 1.0)])
    (out / "edl.toml").write_text(
        """recipe = "edl"
seed = 13
corpus = "corpus.jsonl"

[tag]
gazetteer = "gazetteer.tsv"

[link]
kb = "kb.tsv"
lexicons = ["lexicon.tsv", "lexicon_pivot.tsv"]
threshold = 0.5
incident_countries = ["RW"]
neighbor_countries = ["BI", "UG", "CD", "TZ"]
population_floor = 50000
""",
        encoding="utf-8",
    )


SRC_WORDS = [
    "amazi", "ibiryo", "inzu", "umuhanda", "abantu", "imvura", "isoko", "ishuri", "umujyi", "ivuriro",
    "imodoka", "ikiraro", "umurima", "inka", "amata", "umugati", "igitabo", "umwana", "umugore", "umugabo",
    "ejo", "uyu", "munsi", "cyane", "benshi", "bari", "kandi", "ariko", "nyuma", "mbere",
]
TGT_WORDS = [
    "water", "food", "house", "road", "people", "rain", "market", "school", "city", "clinic",
    "car", "bridge", "field", "cow", "milk", "bread", "book", "child", "woman", "man",
    "yesterday", "this", "day", "very", "many", "were", "and", "but", "after", "before",
]


def mt_fixture(rng):
    out = ROOT / "mt"
    out.mkdir(exist_ok=True)
    lex = dict(zip(SRC_WORDS, TGT_WORDS))
    entities = [("Kigali", "Kigali"), ("Huye", "Huye"), ("Rubavu", "Rubavu"), ("Musanze", "Musanze")]
    docs = []
    for d in range(30):
        src, tgt = [], []
        for _ in range(10):
            words = rng.choices(SRC_WORDS, k=rng.randint(5, 14))
            if rng.random() < 0.3:
                e = rng.choice(entities)
                pos = rng.randint(0, len(words))
                words.insert(pos, e[0])
            s = " ".join(words)
            t = " ".join(lex.get(w, w) for w in words)
            if rng.random() < 0.1:
                url = f"https://relief.example.org/r/{rng.randint(100, 999)}"
                s += " " + url
                t += " " + url
            src.append(s)
            tgt.append(t)
        # Neighboring swaps make some pairs misaligned.
        for i in range(0, 9):
            if rng.random() < 0.1:
                tgt[i], tgt[i + 1] = tgt[i + 1], tgt[i]
        docs.append({"doc_id": f"MT{d:03d}", "src": src, "tgt": tgt})
    write_jsonl(out / "parallel.jsonl", docs)
    write_tsv(out / "lexicon.tsv", [(s, t, 1.0) for s, t in lex.items()])
    write_tsv(out / "entity_lexicon.tsv", [(s, t, 1.0) for s, t in entities + [("Nyagatare", "Nyagatare"), ("Karongi", "Karongi")]])
    mono = []
    for d in range(10):
        segs = []
        for _ in range(5):
            words = rng.choices(SRC_WORDS + ["inkongi", "umwuzure", "inkubi", "imyuzure"], k=rng.randint(4, 10))
            segs.append(" ".join(words))
        mono.append({"doc_id": f"MONO{d:03d}", "genre": "SN", "segments": segs})
    write_jsonl(out / "monolingual.jsonl", mono)
    (out / "mt.toml").write_text(
        """recipe = "mt-data"
seed = 13

[mt]
parallel = "parallel.jsonl"
lexicon = "lexicon.tsv"
entity_lexicon = "entity_lexicon.tsv"
monolingual = "monolingual.jsonl"
swap_rate = 0.1
filter_threshold = 0.5
n_copies = 1
ni_n_max = 2
ni_top_n = 30
""",
        encoding="utf-8",
    )


def main():
    sf_fixture(random.Random(20180101))
    ner_fixture(random.Random(20180102))
    edl_fixture(random.Random(20180103))
    mt_fixture(random.Random(20180104))


if __name__ == "__main__":
    main()
