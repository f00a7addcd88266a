#!/usr/bin/env python3
"""Regenerates the bundled toy fixture files in this directory.

The fixture is a small annotated MT test set (50 English source segments,
two language pairs, four translators per pair, ESA scores) plus the side
resources the toolkit can ingest: a frequency lexicon, CoNLL-U parses,
sentence embeddings for the translations, crowd QE score tables and one
external estimator table.

Everything is seeded; rerunning the script reproduces identical files.
"""

import json
import random
import re
import zlib
from pathlib import Path

HERE = Path(__file__).resolve().parent
RNG = random.Random(20240817)

N_SEGMENTS = 50
PAIRS = [("en", "cs"), ("en", "de")]
SYSTEMS = ["human-A", "mt-alpha", "mt-beta", "online-x"]
HUMANS = {"human-A"}
DOMAINS = ["news", "social", "literary", "speech"]

VOCAB = [
    ("the", 7.73), ("of", 7.22), ("and", 7.08), ("to", 7.06), ("a", 6.99),
    ("in", 6.87), ("is", 6.53), ("for", 6.42), ("that", 6.40), ("on", 6.28),
    ("with", 6.21), ("as", 6.12), ("it", 6.11), ("was", 6.05), ("by", 5.98),
    ("at", 5.92), ("from", 5.85), ("are", 5.84), ("this", 5.81), ("be", 5.77),
    ("report", 4.91), ("market", 4.80), ("council", 4.42), ("village", 4.31),
    ("harvest", 3.92), ("storm", 4.05), ("river", 4.39), ("bridge", 4.21),
    ("festival", 3.97), ("mayor", 3.88), ("museum", 4.02), ("orchestra", 3.41),
    ("negotiation", 3.35), ("turbine", 3.12), ("archive", 3.55), ("glacier", 3.18),
    ("parliament", 4.08), ("referendum", 3.29), ("manuscript", 3.22),
    ("lighthouse", 3.05), ("apprentice", 2.98), ("smuggler", 2.71),
    ("meadow", 3.01), ("harbor", 3.66), ("tram", 3.24), ("chapel", 3.11),
    ("brewery", 2.95), ("quarry", 2.77), ("willow", 2.83), ("falcon", 2.88),
]
# A few words stay out of the lexicon so the OOV floor path gets exercised.
OOV_WORDS = {"smuggler", "quarry", "falcon"}

TRANSLIT = {
    "cs": "abcdefghijklmnoprstuvz",
    "de": "abcdefghijklmnoprstuwz",
}


def make_text(i: int) -> str:
    # Two hand-picked segments keep known token counts in the fixture.
    if i == 7:
        return "We should finish the report today."
    if i == 13:
        return "Geneva"
    n_words = 1 + (i * 7) % 23 + RNG.randint(0, 5)
    words = [RNG.choice(VOCAB)[0] for _ in range(n_words)]
    words[0] = words[0].capitalize()
    text = " ".join(words)
    if i % 9 == 4 and n_words > 6:
        # two-sentence segment
        cut = n_words // 2
        first = " ".join(words[:cut])
        second = " ".join(w for w in words[cut:])
        text = first + ". " + second[0].upper() + second[1:]
    if i % 5 != 2:
        text += "."
    return text


def fake_translation(seg_id: str, tgt: str, system: str, src_text: str) -> str:
    # Deterministic pseudo-translation: word-by-word letter substitution.
    alphabet = TRANSLIT[tgt]
    rng = random.Random(zlib.crc32(f"{seg_id}|{tgt}|{system}".encode()))
    out_words = []
    for w in re.findall(r"[A-Za-z]+|[^\sA-Za-z]", src_text):
        if w.isalpha():
            k = sum(map(ord, w)) % len(alphabet)
            out_words.append("".join(alphabet[(alphabet.find(c.lower()) + k) % len(alphabet)]
                                     if c.lower() in alphabet else c for c in w))
        else:
            out_words.append(w)
    return " ".join(out_words) + f" [{system}]" if rng.random() > 0.15 else " ".join(out_words)


def main() -> None:
    seg_ids = [f"seg{i:03d}" for i in range(1, N_SEGMENTS + 1)]
    texts = {s: make_text(i) for i, s in enumerate(seg_ids, start=1)}
    domains = {s: DOMAINS[i % 4] for i, s in enumerate(seg_ids)}
    docs = {s: f"doc{i // 5:02d}" for i, s in enumerate(seg_ids)}
    difficulty = {s: RNG.uniform(0.0, 25.0) for s in seg_ids}
    err_counts = {s: (i % 4) for i, s in enumerate(seg_ids) if i % 3 == 0}

    base_quality = {"human-A": 93.0, "mt-alpha": 88.0, "mt-beta": 81.0, "online-x": 72.0}
    pair_shift = {("en", "cs"): -2.0, ("en", "de"): 0.0}

    rows = []
    for seg in seg_ids:
        for src, tgt in PAIRS:
            for system in SYSTEMS:
                mean = base_quality[system] + pair_shift[(src, tgt)] + 8.0 - difficulty[seg]
                score = mean + RNG.gauss(0.0, 4.0)
                score = max(0.0, min(100.0, round(score)))
                if system == "online-x":
                    score = 5 * round(score / 5)  # tie-heavy annotator
                if difficulty[seg] < 4.0 and system in ("human-A", "mt-alpha"):
                    score = 100.0
                text = fake_translation(seg, tgt, system, texts[seg])
                if seg.endswith("7") and system == "mt-beta":
                    # duplicate output: mt-beta copies mt-alpha on these segments
                    text = fake_translation(seg, tgt, "mt-alpha", texts[seg])
                row = {
                    "segment_id": seg,
                    "doc_id": docs[seg],
                    "source_lang": src,
                    "target_lang": tgt,
                    "domain": domains[seg],
                    "source_text": texts[seg],
                    "system_id": system,
                    "is_human": system in HUMANS,
                    "translation": text,
                    "human_score": score,
                    "protocol": "ESA",
                }
                if seg in err_counts:
                    row["source_error_count"] = err_counts[seg]
                rows.append(row)

    with open(HERE / "toy_testset.jsonl", "w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row, sort_keys=True, ensure_ascii=False) + "\n")

    cols = ["segment_id", "doc_id", "source_lang", "target_lang", "domain", "source_text",
            "system_id", "is_human", "translation", "human_score", "protocol",
            "source_error_count"]
    with open(HERE / "toy_testset.tsv", "w", encoding="utf-8") as f:
        f.write("\t".join(cols) + "\n")
        for row in rows:
            rec = []
            for c in cols:
                v = row.get(c, "")
                if isinstance(v, bool):
                    v = "true" if v else "false"
                elif isinstance(v, float):
                    v = f"{v:g}"
                rec.append(str(v))
            f.write("\t".join(rec) + "\n")

    manifest = {
        "segments": N_SEGMENTS,
        "translations": len(rows),
        "pairs": {
            f"{src}-{tgt}": {
                "source_texts": N_SEGMENTS,
                "translators": len(SYSTEMS),
                "systems": sorted(SYSTEMS),
            }
            for src, tgt in PAIRS
        },
    }
    (HERE / "toy_manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    lex_rows = [(w, v) for w, v in VOCAB if w not in OOV_WORDS]
    lex_rows += [("geneva", 4.45), ("we", 6.45), ("should", 5.62), ("finish", 4.33), ("today", 5.31)]
    with open(HERE / "lexicon.tsv", "w", encoding="utf-8") as f:
        for w, v in sorted(lex_rows):
            f.write(f"{w}\t{v}\n")

    # CoNLL-U parses: "# segment_id" comment per sentence, one tree each.
    with open(HERE / "parses.conllu", "w", encoding="utf-8") as f:
        for seg in seg_ids:
            sentences = [s for s in re.split(r"(?<=\.)\s+", texts[seg]) if s]
            for sent in sentences:
                f.write(f"# segment_id = {seg}\n")
                forms = re.findall(r"[A-Za-z]+|[^\sA-Za-z]", sent)
                heads = []
                for idx in range(1, len(forms) + 1):
                    if idx == 1:
                        heads.append(0)
                    else:
                        heads.append(RNG.randint(1, idx - 1))
                f.write(f"# text = {sent}\n")
                for idx, (form, head) in enumerate(zip(forms, heads), start=1):
                    rel = "root" if head == 0 else "dep"
                    f.write(f"{idx}\t{form}\t{form.lower()}\t_\t_\t_\t{head}\t{rel}\t_\t_\n")
                f.write("\n")

    emb_rng = random.Random(99)
    with open(HERE / "embeddings.jsonl", "w", encoding="utf-8") as f:
        for seg in seg_ids:
            for src, tgt in PAIRS:
                for system in SYSTEMS:
                    vec = [round(emb_rng.uniform(-1.0, 1.0), 6) for _ in range(8)]
                    f.write(json.dumps({
                        "segment_id": seg, "target_lang": tgt,
                        "system_id": system, "vector": vec,
                    }, sort_keys=True) + "\n")

    # Crowd QE tables: one table per crowd system, keys (segment, lang, *).
    for ci, crowd in enumerate(["crowd_alpha", "crowd_beta"]):
        with open(HERE / f"{crowd}.tsv", "w", encoding="utf-8") as f:
            for seg in seg_ids:
                for src, tgt in PAIRS:
                    if crowd == "crowd_beta" and seg == "seg050" and tgt == "cs":
                        continue  # coverage gap, exercised by the warning path
                    val = 92.0 - difficulty[seg] + RNG.gauss(0.0, 3.0) - 2.0 * ci
                    f.write(f"{seg}\t{tgt}\t*\t{round(val, 2)}\n")

    with open(HERE / "external_scores.tsv", "w", encoding="utf-8") as f:
        for seg in seg_ids:
            val = 90.0 - difficulty[seg] + RNG.gauss(0.0, 5.0)
            f.write(f"{seg}\t*\t*\t{round(val, 2)}\n")

    estimators = {
        "estimators": {
            "length": {"kind": "text_length"},
            "rarity": {"kind": "word_rarity", "lexicon": "lexicon.tsv", "floor": 0.0},
            "syntax": {"kind": "syntactic_complexity", "parses": "parses.conllu"},
            "external": {"kind": "external", "path": "external_scores.tsv",
                         "orientation": "quality_like"},
            "crowd": {"kind": "crowd_aggregate", "mode": "pooled",
                      "tables": ["crowd_alpha.tsv", "crowd_beta.tsv"]},
            "oracle-src": {"kind": "oracle_src"},
            "random": {"kind": "random"},
        }
    }
    (HERE / "estimators.json").write_text(json.dumps(estimators, indent=2, sort_keys=True) + "\n")

    print(f"wrote fixture files for {N_SEGMENTS} segments / {len(rows)} rows")


if __name__ == "__main__":
    main()
