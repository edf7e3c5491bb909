#!/usr/bin/env python3
"""Regenerate the derived test fixtures under tests/data.

The synthetic corpus, the echo script, and the demonstration stores are
derived data with this script as their single source. The schemas, the
replay script, and the team config in the same directory are maintained by
hand. Everything here is deterministic: fixed word lists, no RNG.
"""

from __future__ import annotations

import argparse
import json
import logging
import re
from pathlib import Path

from kgcollab import (
    DatasetRecord,
    EntityMention,
    EventRecord,
    RelationTriple,
    TaskKind,
    parse_result,
    save_dataset,
    serialize_items,
)

logger = logging.getLogger(__name__)

AGENT_IDS = {TaskKind.NER: "ner", TaskKind.RE: "re", TaskKind.EE: "ee"}

# (person, org, city) for the founding template
FOUNDERS = [
    ("Maria Vela", "Quantia Labs", "Lisbon"),
    ("Jonas Brandt", "Nordwind Energie", "Hamburg"),
    ("Priya Raman", "Cedarline Analytics", "Toronto"),
    ("Tomas Vrba", "Okno Studio", "Prague"),
    ("Aisha Diallo", "Sahel Grid", "Dakar"),
    ("Marco Furlan", "Adriatic Robotics", "Trieste"),
    ("Helen Byrne", "Claddagh Biotech", "Galway"),
    ("Kenji Mori", "Harbor Lens", "Yokohama"),
    ("Lucia Prado", "Andes Water", "Cusco"),
    ("Oskar Lind", "Fjordware", "Bergen"),
]

# (person, country, org, city) for the attack template
ATTACKS = [
    ("Daniel Reyes", "Chile", "Banco Austral", "Valparaiso"),
    ("Nadia Petrova", "Bulgaria", "Sofia Telecom", "Plovdiv"),
    ("Samir Haddad", "Lebanon", "Cedar Freight", "Tripoli"),
    ("Ingrid Voss", "Austria", "Alpenbahn", "Innsbruck"),
    ("Mateo Ibarra", "Uruguay", "Plata Shipping", "Salto"),
    ("Yuki Tanaka", "Japan", "Kansai Power", "Sakai"),
    ("Bram Jansen", "Belgium", "Maas Logistics", "Hasselt"),
    ("Carmen Solis", "Peru", "Lima Cable", "Iquitos"),
    ("Viktor Hale", "Estonia", "Baltic Databanks", "Tartu"),
    ("Zofia Kowal", "Poland", "Vistula Mills", "Radom"),
]


def founder_record(index: int, person: str, org: str, city: str) -> DatasetRecord:
    text = f"{person} founded {org} in {city} last year."
    gold = {
        TaskKind.NER: (
            EntityMention("PER", person),
            EntityMention("ORG", org),
            EntityMention("LOC", city),
        ),
        TaskKind.RE: (RelationTriple(org, "org-founded_by", person),),
        TaskKind.EE: (
            EventRecord(
                "Business:Start-Org",
                "founded",
                (("Agent", person), ("Org", org), ("Place", city)),
            ),
        ),
    }
    return DatasetRecord(id=f"a{index:02d}", text=text, gold=gold)


def attack_record(
    index: int, person: str, country: str, org: str, city: str
) -> DatasetRecord:
    text = f"{person}, a citizen of {country}, attacked the offices of {org} near {city}."
    gold = {
        TaskKind.NER: (
            EntityMention("PER", person),
            EntityMention("LOC", country),
            EntityMention("ORG", org),
            EntityMention("LOC", city),
        ),
        TaskKind.RE: (RelationTriple(person, "person-nationality", country),),
        TaskKind.EE: (
            EventRecord(
                "Conflict-Attack",
                "attacked",
                (("Attacker", person), ("Target", org), ("Place", city)),
            ),
        ),
    }
    return DatasetRecord(id=f"b{index:02d}", text=text, gold=gold)


def build_corpus() -> list[DatasetRecord]:
    records = [
        founder_record(i, *fields) for i, fields in enumerate(FOUNDERS, 1)
    ]
    records.extend(
        attack_record(i, *fields) for i, fields in enumerate(ATTACKS, 1)
    )
    return records


def build_echo_script(records: list[DatasetRecord]) -> dict:
    """One agent-filtered rule per (record, task), anchored on the record text.

    The input text is present verbatim in every round's messages, so the
    rule fires in every round and the agent keeps answering its gold.
    """
    rules = []
    for record in records:
        pattern = re.escape(record.text)
        for task, agent_id in AGENT_IDS.items():
            rules.append(
                {
                    "pattern": pattern,
                    "agent_id": agent_id,
                    "text": serialize_items(record.gold[task], task),
                }
            )
    return {"script_version": 1, "responses": [], "fallbacks": rules}


DEMOS = {
    TaskKind.NER: [
        ("Ingrid Halvorsen chaired the panel.", [EntityMention("PER", "Ingrid Halvorsen")]),
        ("The keynote was given by Samuel Osei.", [EntityMention("PER", "Samuel Osei")]),
        ("The summit convened in Geneva.", [EntityMention("LOC", "Geneva")]),
        ("Flood warnings covered the Rhine valley.", [EntityMention("LOC", "Rhine valley")]),
        ("Verdane Press printed the program.", [EntityMention("ORG", "Verdane Press")]),
        ("The prize included a Stradivarius violin.", [EntityMention("MISC", "Stradivarius")]),
    ],
    TaskKind.RE: [
        ("Ana Duarte writes for Jornal do Porto.",
         [RelationTriple("Ana Duarte", "person-works_for", "Jornal do Porto")]),
        ("Piotr Nowak joined Krakow Steelworks.",
         [RelationTriple("Piotr Nowak", "person-works_for", "Krakow Steelworks")]),
        ("Elena Ruiz has lived in Seville for a decade.",
         [RelationTriple("Elena Ruiz", "person-place_lived", "Seville")]),
        ("Farid Azimi returned home to Iran.",
         [RelationTriple("Farid Azimi", "person-nationality", "Iran")]),
        ("Tess Marchetti started Lumen Atelier.",
         [RelationTriple("Lumen Atelier", "org-founded_by", "Tess Marchetti")]),
        ("Alfama is a district of Lisbon.",
         [RelationTriple("Alfama", "location-located_in", "Lisbon")]),
    ],
    TaskKind.EE: [
        ("The delegation arrived in Vienna by train.",
         [EventRecord("Movement:Transport", "arrived",
                      (("Agent", "the delegation"), ("Destination", "Vienna"), ("Vehicle", "train")))]),
        ("Relief supplies were flown to the coast.",
         [EventRecord("Movement:Transport", "flown",
                      (("Artifact", "Relief supplies"), ("Destination", "the coast")))]),
        ("Raiders stormed the depot at dawn.",
         [EventRecord("Conflict-Attack", "stormed",
                      (("Attacker", "Raiders"), ("Target", "the depot"), ("Time", "dawn")))]),
        ("The convoy was shelled near the ridge.",
         [EventRecord("Conflict-Attack", "shelled",
                      (("Target", "The convoy"), ("Place", "the ridge")))]),
        ("Two engineers launched a repair cooperative in Turin.",
         [EventRecord("Business:Start-Org", "launched",
                      (("Agent", "Two engineers"), ("Org", "a repair cooperative"), ("Place", "Turin")))]),
        ("The guild was established in 1321.",
         [EventRecord("Business:Start-Org", "established",
                      (("Org", "The guild"), ("Time", "1321")))]),
    ],
}


def write_demo_store(out_dir: Path, task: TaskKind) -> Path:
    lines = []
    for text, items in DEMOS[task]:
        answer = serialize_items(items, task)
        parsed = parse_result(task, answer)
        assert not parsed.parse_warnings and tuple(parsed.items) == tuple(items), answer
        lines.append(json.dumps({"text": text, "answer": answer}, ensure_ascii=False))
    path = out_dir / f"demos_{task.value.lower()}.jsonl"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--out-dir",
        default=str(Path(__file__).resolve().parent.parent / "tests" / "data"),
        help="directory to write the fixtures into",
    )
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    records = build_corpus()
    corpus_path = out_dir / "corpus20.jsonl"
    save_dataset(records, corpus_path)
    logger.info("wrote %s (%d records)", corpus_path, len(records))

    script_path = out_dir / "echo_script.json"
    script_path.write_text(
        json.dumps(build_echo_script(records), ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )
    logger.info("wrote %s", script_path)

    for task in TaskKind:
        path = write_demo_store(out_dir, task)
        logger.info("wrote %s", path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
