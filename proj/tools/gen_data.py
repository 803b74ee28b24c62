#!/usr/bin/env python3
"""Regenerates the bundled toy lexicon and synthetic corpora under data/.

Everything here is deterministic (fixed seed). The output files are checked
in; rerun this script only when the paradigms or templates change.
"""

import os
import random
import sys

HERE = os.path.dirname(os.path.abspath(__file__))
DATA = os.path.join(HERE, "..", "data")

VOWELS = set("aAiIuUfFxXeEoO")

# ---------------------------------------------------------------------------
# paradigms

CASES = ["NOM", "ACC", "INS", "DAT", "ABL", "GEN", "LOC", "VOC"]
NUMS = ["SG", "DU", "PL"]

A_MASC = {
    "SG": ["aH", "am", "ena", "Aya", "At", "asya", "e", "a"],
    "DU": ["O", "O", "AByAm", "AByAm", "AByAm", "ayoH", "ayoH", "O"],
    "PL": ["AH", "An", "EH", "eByaH", "eByaH", "AnAm", "ezu", "AH"],
}
A_NEUT = {
    "SG": ["am", "am", "ena", "Aya", "At", "asya", "e", "a"],
    "DU": ["e", "e", "AByAm", "AByAm", "AByAm", "ayoH", "ayoH", "e"],
    "PL": ["Ani", "Ani", "EH", "eByaH", "eByaH", "AnAm", "ezu", "Ani"],
}
AA_FEM = {
    "SG": ["A", "Am", "ayA", "AyE", "AyAH", "AyAH", "AyAm", "e"],
    "DU": ["e", "e", "AByAm", "AByAm", "AByAm", "ayoH", "ayoH", "e"],
    "PL": ["AH", "AH", "ABiH", "AByaH", "AByaH", "AnAm", "Asu", "AH"],
}

MASC_NOUNS = ["rAma", "dAsa", "nara", "nAga", "deva", "bAla", "aSva", "vfkza",
              "putra", "jana", "gaja", "sUrya", "candra", "grAma", "raTa",
              "hasta", "loka", "Sizya", "AcArya", "kfzRa", "nfpa", "vIra",
              "meGa", "parvata", "samudra", "Sara", "kAka", "mfga", "siMha",
              "vAnara"]
NEUT_NOUNS = ["vana", "Pala", "jala", "puzpa", "gfha", "pustaka", "ambara",
              "nagara", "anna", "kzetra", "mitra", "bala", "Dana", "vastra",
              "SAstra", "jYAna", "suKa", "duHKa", "nayana", "vacana"]
FEM_NOUNS = ["sItA", "latA", "mAlA", "kanyA", "bAlA", "vidyA", "senA", "SAlA",
             "kaTA", "gaNgA", "yamunA", "pUjA", "BAryA", "prajA", "guhA"]
ADJECTIVES = ["pIta", "praBUta", "sundara", "nava", "Sveta", "dIrGa", "uttama",
              "priya", "SuBra", "rakta", "nIla", "vfdDa"]

# (lemma, present stem)
VERBS = [("BU", "Bava"), ("gam", "gacCa"), ("paW", "paWa"), ("vad", "vada"),
         ("pac", "paca"), ("liK", "liKa"), ("nI", "naya"), ("ji", "jaya"),
         ("smf", "smara"), ("Df", "Dara"), ("dfS", "paSya"), ("sTA", "tizWa"),
         ("pA", "piba"), ("cal", "cala"), ("KAd", "KAda"), ("vas", "vasa"),
         ("rakz", "rakza"), ("pat", "pata"), ("kzip", "kzipa"), ("iz", "icCa"),
         ("nam", "nama")]

PRES = {("3", "SG"): "ti", ("3", "DU"): "taH", ("3", "PL"): "nti",
        ("2", "SG"): "si", ("2", "DU"): "TaH", ("2", "PL"): "Ta",
        ("1", "SG"): "Ami", ("1", "DU"): "AvaH", ("1", "PL"): "AmaH"}
IMPV = {("3", "SG"): "tu", ("3", "DU"): "tAm", ("3", "PL"): "ntu",
        ("2", "SG"): "", ("2", "DU"): "tam", ("2", "PL"): "ta",
        ("1", "SG"): "Ani", ("1", "DU"): "Ava", ("1", "PL"): "Ama"}

PRONOUNS = [
    ("aham", "asmad", "PRON,NOM,SG"), ("mAm", "asmad", "PRON,ACC,SG"),
    ("mayA", "asmad", "PRON,INS,SG"), ("mahyam", "asmad", "PRON,DAT,SG"),
    ("mat", "asmad", "PRON,ABL,SG"), ("mama", "asmad", "PRON,GEN,SG"),
    ("mayi", "asmad", "PRON,LOC,SG"), ("vayam", "asmad", "PRON,NOM,PL"),
    ("tvam", "yuzmad", "PRON,NOM,SG"), ("tvAm", "yuzmad", "PRON,ACC,SG"),
    ("tvayA", "yuzmad", "PRON,INS,SG"), ("tuByam", "yuzmad", "PRON,DAT,SG"),
    ("tvat", "yuzmad", "PRON,ABL,SG"), ("tava", "yuzmad", "PRON,GEN,SG"),
    ("tvayi", "yuzmad", "PRON,LOC,SG"), ("yUyam", "yuzmad", "PRON,NOM,PL"),
    ("saH", "tad", "PRON,NOM,SG,M"), ("tam", "tad", "PRON,ACC,SG,M"),
    ("tena", "tad", "PRON,INS,SG,M"), ("tasmE", "tad", "PRON,DAT,SG,M"),
    ("tasmAt", "tad", "PRON,ABL,SG,M"), ("tasya", "tad", "PRON,GEN,SG,M"),
    ("tasmin", "tad", "PRON,LOC,SG,M"), ("sA", "tad", "PRON,NOM,SG,F"),
    ("tAm", "tad", "PRON,ACC,SG,F"), ("tayA", "tad", "PRON,INS,SG,F"),
    ("tat", "tad", "PRON,NOM,SG,N"), ("tat", "tad", "PRON,ACC,SG,N"),
]
INDECLINABLES = ["ca", "ha", "eva", "api", "iti", "na", "tu", "atra", "tatra",
                 "sadA", "punaH", "saha", "iva", "yadi", "tadA", "adya",
                 "kutra", "kaTam", "hi", "upa"]

EXTRA = [
    ("upaviveSa", "upaviS", "VERB,SG,3,PERF"),
    ("uvAca", "vac", "VERB,SG,3,PERF"),
    ("jagAma", "gam", "VERB,SG,3,PERF"),
]

RETROFLEX_TRIGGERS = set("rzfF")
NATVA_TRANSPARENT = set("aAiIuUfFxXeEoOhyvrkKgGNpPbBmM")


def natva(word):
    """n -> R after r/z/f within the word when only transparent sounds intervene."""
    out = list(word)
    armed = False
    for i, ch in enumerate(out):
        if ch in RETROFLEX_TRIGGERS:
            armed = True
            continue
        if ch == "n" and armed and i + 1 < len(out) and (out[i + 1] in VOWELS or out[i + 1] in "nmyv"):
            out[i] = "R"
            armed = False
            continue
        if ch not in NATVA_TRANSPARENT:
            armed = False
    return "".join(out)


def decline(stem, paradigm, gender, pos):
    base = stem[:-1]
    rows = []
    for num in NUMS:
        for case, ending in zip(CASES, paradigm[num]):
            rows.append((natva(base + ending), stem, f"{pos},{case},{num},{gender}"))
    return rows


def conjugate(lemma, stem):
    rows = []
    base = stem[:-1]
    for mood, table in (("PRES", PRES), ("IMPV", IMPV)):
        for (person, num), ending in table.items():
            if ending.startswith("A"):
                form = base + ending
            elif ending == "":
                form = stem
            else:
                form = stem + ending
            if ending in ("nti", "ntu"):
                form = stem + ending
            rows.append((natva(form), lemma, f"VERB,{num},{person},{mood}"))
    return rows


def build_lexicon():
    rows = []
    for s in MASC_NOUNS:
        rows += decline(s, A_MASC, "M", "NOUN")
    for s in NEUT_NOUNS:
        rows += decline(s, A_NEUT, "N", "NOUN")
    for s in FEM_NOUNS:
        rows += decline(s, AA_FEM, "F", "NOUN")
    for s in ADJECTIVES:
        rows += decline(s, A_MASC, "M", "ADJ")
        rows += decline(s, A_NEUT, "N", "ADJ")
        rows += decline(s[:-1] + "A", AA_FEM, "F", "ADJ")
    for lemma, stem in VERBS:
        rows += conjugate(lemma, stem)
    rows += PRONOUNS
    rows += [(w, w, "INDECL") for w in INDECLINABLES]
    rows += EXTRA
    seen = set()
    out = []
    for r in rows:
        if r not in seen:
            seen.add(r)
            out.append(r)
    return out


# ---------------------------------------------------------------------------
# sandhi (same first-match semantics as the C++ joiner)

def load_rules():
    rules = []
    with open(os.path.join(DATA, "sandhi_rules.tsv"), encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            rid, l, r, s = line.split("\t")
            rules.append((rid, "" if l == "-" else l, "" if r == "-" else r, s))
    return rules


def select(rules, left, right):
    if not left or not right:
        return None
    for rule in rules:
        if left.endswith(rule[1]) and right.startswith(rule[2]):
            return rule
    return None


def join_words(rules, words):
    out = ""
    consumed = 0
    for k, w in enumerate(words):
        rest = w[consumed:]
        if k + 1 == len(words):
            out += rest
            break
        rule = select(rules, rest, words[k + 1])
        if rule:
            out += rest[: len(rest) - len(rule[1])] + rule[3]
            consumed = len(rule[2])
        else:
            out += rest
            consumed = 0
    return out


# ---------------------------------------------------------------------------
# corpora

LABELS = ["root", "karta", "karma", "karana", "sampradana", "apadana",
          "adhikarana", "viseshana"]
CASE_LABEL = {"INS": "karana", "DAT": "sampradana", "ABL": "apadana",
              "LOC": "adhikarana"}


def tag_fields(spec):
    return spec.split(",")


def unambiguous_forms(lexicon):
    counts = {}
    for form, _, _ in lexicon:
        counts[form] = counts.get(form, 0) + 1
    return {f for f, c in counts.items() if c == 1}


def seg_corpus(rng, lexicon, rules, n):
    forms = sorted({r[0] for r in lexicon})
    nouns = sorted({r[0] for r in lexicon if r[2].startswith("NOUN")})
    verbs = sorted({r[0] for r in lexicon if r[2].startswith("VERB")})
    fixed = [["dAsaH", "Bava"], ["praBUta", "nara", "nAgena"],
             ["balena", "upaviveSa", "ha"], ["pIta", "ambaram"]]
    out = []
    surfaces = {}
    for words in fixed:
        surfaces[join_words(rules, words)] = words
        out.append(words)
    while len(out) < n:
        k = rng.randint(2, 4)
        words = [rng.choice(nouns) for _ in range(k - 1)] + [rng.choice(verbs)]
        rng.shuffle(words)
        if rng.random() < 0.3:
            words.insert(rng.randrange(len(words) + 1), rng.choice(forms))
        surface = join_words(rules, words)
        # one gold analysis per surface keeps the corpus consistent
        if surface in surfaces:
            continue
        if all(join_words(rules, [a, b]) == a + b for a, b in zip(words, words[1:])):
            if rng.random() < 0.7:
                continue  # prefer sentences with at least one sandhi junction
        surfaces[surface] = words
        out.append(words)
    return out


def pick(rng, pool):
    return rng.choice(sorted(pool))


def treebank(rng, lexicon, n, unique):
    by_tag = {}
    lemma_of = {}
    for form, lemma, tag in lexicon:
        if form in unique:
            by_tag.setdefault(tag, []).append(form)
            lemma_of[form] = lemma
    sentences = []
    seen = set()
    while len(sentences) < n:
        num = rng.choice(["SG", "SG", "PL"])
        gender = rng.choice(["M", "N", "F"])
        tokens = []  # (form, lemma, tag, head_key, label, key)
        verb_tag = f"VERB,{num},3,{rng.choice(['PRES', 'PRES', 'IMPV'])}"
        verb = pick(rng, by_tag[verb_tag])
        roles = [("NOM", "karta")]
        if rng.random() < 0.8:
            roles.append(("ACC", "karma"))
        for case in ("INS", "DAT", "ABL", "LOC"):
            if rng.random() < 0.25:
                roles.append((case, CASE_LABEL[case]))
        rng.shuffle(roles)
        units = []
        for idx, (case, label) in enumerate(roles):
            nnum = num if case == "NOM" else rng.choice(["SG", "PL", "DU"])
            g = gender if case == "NOM" else rng.choice(["M", "N", "F"])
            tag = f"NOUN,{case},{nnum},{g}"
            if tag not in by_tag:
                continue
            noun = pick(rng, by_tag[tag])
            unit = [(noun, lemma_of[noun], tag, "V", label, f"n{idx}")]
            adj_tag = f"ADJ,{case},{nnum},{g}"
            if rng.random() < 0.35 and adj_tag in by_tag:
                adj = pick(rng, by_tag[adj_tag])
                unit.insert(0, (adj, lemma_of[adj], adj_tag, f"n{idx}", "viseshana", f"a{idx}"))
            units.append(unit)
        if not units:
            continue
        units.insert(rng.randrange(len(units) + 1), [(verb, lemma_of[verb], verb_tag, "ROOT", "root", "V")])
        flat = [t for u in units for t in u]
        key = " ".join(t[0] for t in flat)
        if key in seen:
            continue
        seen.add(key)
        pos = {t[5]: i + 1 for i, t in enumerate(flat)}
        rows = []
        for i, t in enumerate(flat):
            head = 0 if t[3] == "ROOT" else pos[t[3]]
            rows.append((i + 1, t[0], t[1], t[2], head, t[4]))
        sentences.append(rows)
    return sentences


UPOS = {"NOUN": "NOUN", "VERB": "VERB", "ADJ": "ADJ", "PRON": "PRON", "INDECL": "ADV"}


def write_conllu(path, sentences, prefix):
    with open(path, "w", encoding="utf-8") as f:
        for k, rows in enumerate(sentences):
            f.write(f"# sent_id = {prefix}-{k + 1}\n")
            f.write("# text = " + " ".join(r[1] for r in rows) + "\n")
            for (i, form, lemma, tag, head, label) in rows:
                upos = UPOS[tag.split(",")[0]]
                f.write(f"{i}\t{form}\t{lemma}\t{upos}\t{tag}\t_\t{head}\t{label}\t_\t_\n")
            f.write("\n")


COMPOUNDS = [
    # (constituents, class)
    (["pIta", "ambaram"], "TATPURUSHA"),
    (["rAja", "puruzaH"], "TATPURUSHA"),
    (["deva", "AlayaH"], "TATPURUSHA"),
    (["nIla", "utpalam"], "TATPURUSHA"),
    (["grAma", "vAsI"], "TATPURUSHA"),
    (["mahA", "rAjaH"], "TATPURUSHA"),
    (["rAma", "lakzmaRO"], "DVANDVA"),
    (["mAtA", "pitarO"], "DVANDVA"),
    (["deva", "asurAH"], "DVANDVA"),
    (["Pala", "puzpARi"], "DVANDVA"),
    (["pIta", "ambaraH"], "BAHUVRIHI"),
    (["nIla", "kaRWaH"], "BAHUVRIHI"),
    (["mahA", "bAhuH"], "BAHUVRIHI"),
    (["daSa", "AnanaH"], "BAHUVRIHI"),
    (["upa", "gaNgam"], "AVYAYIBHAVA"),
    (["yaTA", "Sakti"], "AVYAYIBHAVA"),
    (["prati", "dinam"], "AVYAYIBHAVA"),
    (["saha", "Adaram"], "AVYAYIBHAVA"),
]

CONTEXT_LEFT = ["aham", "saH", "tvam", "sA", "vayam", "rAmaH", "sItA", "janAH"]
CONTEXT_RIGHT = ["DarAmi", "paSyati", "vadati", "namAmi", "smarati", "gacCati",
                 "paWati", "vasati"]


COMPOUND_TAGS = {
    "pIta+ambaram": "NOUN,ACC,SG,N", "rAja+puruzaH": "NOUN,NOM,SG,M", "deva+AlayaH": "NOUN,NOM,SG,M",
    "nIla+utpalam": "NOUN,ACC,SG,N", "grAma+vAsI": "NOUN,NOM,SG,M", "mahA+rAjaH": "NOUN,NOM,SG,M",
    "rAma+lakzmaRO": "NOUN,NOM,DU,M", "mAtA+pitarO": "NOUN,NOM,DU,M", "deva+asurAH": "NOUN,NOM,PL,M",
    "Pala+puzpARi": "NOUN,ACC,PL,N", "pIta+ambaraH": "ADJ,NOM,SG,M", "nIla+kaRWaH": "ADJ,NOM,SG,M",
    "mahA+bAhuH": "ADJ,NOM,SG,M", "daSa+AnanaH": "ADJ,NOM,SG,M", "upa+gaNgam": "INDECL",
    "yaTA+Sakti": "INDECL", "prati+dinam": "INDECL", "saha+Adaram": "INDECL",
}


def compound_relation(tag):
    if tag.startswith("INDECL"):
        return "viseshana"
    return "karma" if ",ACC," in tag else "karta"


def compound_corpus(rng, rules, n):
    out = []
    seen = set()
    # the same constituents in two contexts with two different classes
    out.append((["aham", join_words(rules, ["pIta", "ambaram"]), "DarAmi"], 1,
                ["pIta", "ambaram"], "TATPURUSHA"))
    out.append((["aham", join_words(rules, ["pIta", "ambaram"]), "namAmi"], 1,
                ["pIta", "ambaram"], "BAHUVRIHI"))
    for s, _, _, _ in out:
        seen.add(" ".join(s))
    i = 0
    while len(out) < n:
        consts, label = COMPOUNDS[i % len(COMPOUNDS)]
        i += 1
        surface = join_words(rules, consts)
        sent = [rng.choice(CONTEXT_LEFT), surface, rng.choice(CONTEXT_RIGHT)]
        if rng.random() < 0.5:
            sent.insert(0, rng.choice(["atra", "tatra", "adya", "sadA"]))
        key = " ".join(sent)
        if key in seen:
            continue
        seen.add(key)
        out.append((sent, sent.index(surface), consts, label))
    return out


def main():
    rng = random.Random(20230710)
    lexicon = build_lexicon()
    rules = load_rules()
    with open(os.path.join(DATA, "lexicon.tsv"), "w", encoding="utf-8") as f:
        f.write("# Toy inflected-form lexicon, SLP1.\n")
        f.write("# surface\tlemma\ttag-spec (POS,CASE,NUMBER,GENDER,PERSON,TENSE; NONE fields omitted)\n")
        for form, lemma, tag in lexicon:
            f.write(f"{form}\t{lemma}\t{tag}\n")

    os.makedirs(os.path.join(DATA, "corpus"), exist_ok=True)
    seg = seg_corpus(rng, lexicon, rules, 50)
    with open(os.path.join(DATA, "corpus", "seg_train.txt"), "w", encoding="utf-8") as f:
        f.write("# Gold segmentations, one sentence per line, words joined by '_'.\n")
        for words in seg:
            f.write("_".join(words) + "\n")

    unique = unambiguous_forms(lexicon)
    tb = treebank(rng, lexicon, 70, unique)
    write_conllu(os.path.join(DATA, "corpus", "treebank_train.conllu"), tb[:50], "train")
    write_conllu(os.path.join(DATA, "corpus", "treebank_fixture.conllu"), tb[50:], "fixture")

    comp = compound_corpus(rng, rules, 30)
    with open(os.path.join(DATA, "corpus", "compound_train.tsv"), "w", encoding="utf-8") as f:
        f.write("# sentence\tspan-index\tconstituents\tlabel\t[tag-spec\tdeprel of the compound token]\n")
        for sent, span, consts, label in comp:
            key = "+".join(consts)
            tag = COMPOUND_TAGS[key]
            f.write(f"{' '.join(sent)}\t{span}\t{key}\t{label}\t{tag}\t{compound_relation(tag)}\n")

    with open(os.path.join(DATA, "labels.txt"), "w", encoding="utf-8") as f:
        f.write("# Dependency relation inventory (karaka-style), one per line.\n")
        for l in LABELS:
            f.write(l + "\n")

    # embedding demo corpus: sentences from the treebank generator
    emb = treebank(random.Random(7), lexicon, 400, unique)
    os.makedirs(os.path.join(DATA, "embeddings"), exist_ok=True)
    with open(os.path.join(DATA, "embeddings", "corpus.txt"), "w", encoding="utf-8") as f:
        for rows in emb:
            f.write(" ".join(r[1] for r in rows) + "\n")

    write_inventories(os.path.join(DATA, "embeddings"), emb, lexicon)

    print(f"lexicon: {len(lexicon)} entries, {len({r[0] for r in lexicon})} forms", file=sys.stderr)


def write_inventories(out_dir, sentences, lexicon):
    """Demo query inventories over words of the embedding corpus."""
    seen = {r[1] for rows in sentences for r in rows}
    tag_of = {}
    for form, lemma, tag in lexicon:
        tag_of.setdefault(form, (lemma, tag))
    nom = {}
    acc = {}
    for form, (lemma, tag) in sorted(tag_of.items()):
        if form not in seen or not tag.startswith("NOUN"):
            continue
        if tag.startswith("NOUN,NOM,SG"):
            nom.setdefault(lemma, form)
        elif tag.startswith("NOUN,ACC,SG"):
            acc.setdefault(lemma, form)
    both = sorted(set(nom) & set(acc))
    verbs = sorted(f for f, (_, t) in tag_of.items() if f in seen and t.startswith("VERB"))

    with open(os.path.join(out_dir, "analogy.tsv"), "w", encoding="utf-8") as f:
        f.write("# ANALOGY a b c d: nominative to accusative singular\n")
        for x, y in zip(both, both[1:]):
            f.write(f"ANALOGY\t{nom[x]}\t{acc[x]}\t{nom[y]}\t{acc[y]}\n")
    with open(os.path.join(out_dir, "categorization.tsv"), "w", encoding="utf-8") as f:
        f.write("# CATEGORIZATION word category\n")
        for x in both[:8]:
            f.write(f"CATEGORIZATION\t{nom[x]}\tnominal\n")
        for v in verbs[:8]:
            f.write(f"CATEGORIZATION\t{v}\tverbal\n")
    with open(os.path.join(out_dir, "relatedness.tsv"), "w", encoding="utf-8") as f:
        f.write("# RELATEDNESS w1 w2 score (same lemma 1.0, noun and verb 0.0)\n")
        for x, v in zip(both[:8], verbs[:8]):
            f.write(f"RELATEDNESS\t{nom[x]}\t{acc[x]}\t1.0\n")
            f.write(f"RELATEDNESS\t{nom[x]}\t{v}\t0.0\n")
    with open(os.path.join(out_dir, "synonym.tsv"), "w", encoding="utf-8") as f:
        f.write("# SYNONYM query answer-index option...: pick the same lemma\n")
        for i, x in enumerate(both[:8]):
            f.write(f"SYNONYM\t{nom[x]}\t0\t{acc[x]}\t{verbs[i % len(verbs)]}\t{verbs[(i + 3) % len(verbs)]}\n")


if __name__ == "__main__":
    main()
