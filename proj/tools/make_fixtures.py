#!/usr/bin/env python3
"""Regenerates tests/fixtures from a fixed seed.

mixed/        100 documents: 60 publications (JSONL, corpus semanticscholar),
              25 EPO and 15 USPTO patents (one XML file each).
malformed/    10 JSONL lines of which 3 are rejected.
docdb/        one bibliographic-only EPO record.
"""

import json
import random
from pathlib import Path
from xml.sax.saxutils import escape

ROOT = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

TOPICS = {
    "vehicle": "vehicle seat occupant restraint collision belt cushion inflator deployment sensor crash "
               "steering frontal impact housing module passenger restraint tether".split(),
    "battery": "battery cell lithium electrode anode cathode electrolyte charge discharge separator "
               "capacity thermal pack voltage ion solid state".split(),
    "learning": "neural network training model learning gradient embedding transformer classification "
                "dataset representation attention loss optimization inference".split(),
    "genomics": "gene sequence protein expression genome mutation cell rna dna variant transcription "
                "assay clinical biomarker tissue".split(),
    "wireless": "antenna signal wireless channel frequency transmitter receiver modulation base station "
                "network beam spectrum interference uplink downlink".split(),
    "materials": "polymer coating composite fiber surface layer resin adhesive substrate thermal "
                 "mechanical strength film particle curing".split(),
}
COMMON = "method system device apparatus process first second plurality configured comprising " \
         "wherein provided based improved according unit means portion control".split()


def text(rng, topic, n):
    words = [rng.choice(TOPICS[topic]) if rng.random() < 0.7 else rng.choice(COMMON) for _ in range(n)]
    return " ".join(words)


def sentence(rng, topic, n):
    t = text(rng, topic, n)
    return t[0].upper() + t[1:] + "."


def patent_xml(doc, docdb=False):
    attr = ' type="docdb"' if docdb else ""
    out = [f'<?xml version="1.0" encoding="UTF-8"?>', f"<patent-document{attr}>"]
    out.append(f"  <publication-number>{doc['id']}</publication-number>")
    for field in ("country", "kind", "publication-date"):
        out.append(f"  <{field}>{doc[field]}</{field}>")
    out.append(f"  <title>{escape(doc['title'])}</title>")
    if "abstract" in doc:
        out.append(f"  <abstract><p>{escape(doc['abstract'])}</p></abstract>")
    if "claims" in doc:
        out.append("  <claims>")
        for c in doc["claims"]:
            out.append(f"    <claim>{escape(c)}</claim>")
        out.append("  </claims>")
    if "description" in doc:
        out.append(f"  <description><p>{escape(doc['description'])}</p></description>")
    out.append("  <classifications>")
    for c in doc["classifications"]:
        out.append(f"    <classification>{c}</classification>")
    out.append("  </classifications>")
    out.append(f"  <applicants><applicant>{escape(doc['applicant'])}</applicant></applicants>")
    out.append("</patent-document>")
    return "\n".join(out) + "\n"


def main():
    rng = random.Random(20240501)
    topics = sorted(TOPICS)
    seen = set()

    def unique(make):
        while True:
            value = make()
            if value not in seen:
                seen.add(value)
                return value

    mixed = ROOT / "mixed"
    (mixed / "publications").mkdir(parents=True, exist_ok=True)
    (mixed / "epo").mkdir(parents=True, exist_ok=True)
    (mixed / "uspto").mkdir(parents=True, exist_ok=True)

    with open(mixed / "publications" / "papers.jsonl", "w") as f:
        for i in range(60):
            topic = topics[i % len(topics)]
            rec = {
                "id": f"S2-{100000 + i}",
                "title": unique(lambda: sentence(rng, topic, 8)),
                "abstract": unique(lambda: sentence(rng, topic, 60)),
                "authors": [f"Author {chr(65 + i % 26)}{i}", f"Coauthor {i}"],
                "year": 2010 + i % 12,
                "venue": f"Journal of {topic.title()}",
            }
            f.write(json.dumps(rec) + "\n")

    airbag = {
        "id": "EP19164094B1",
        "country": "EP",
        "kind": "B1",
        "publication-date": "2021-03-17",
        "title": "Airbag",
        "abstract": "Airbags are inflatable cushions that protect vehicle occupants during a crash.",
        "claims": ["An airbag comprising an inflatable cushion and a gas generator."],
        "classifications": ["B60R21/16"],
        "applicant": "Example Safety Systems",
    }
    (mixed / "epo" / "EP19164094B1.xml").write_text(patent_xml(airbag))
    for i in range(24):
        topic = topics[i % len(topics)]
        doc = {
            "id": f"EP{18000000 + i * 7919}B1",
            "country": "EP",
            "kind": "B1",
            "publication-date": f"20{15 + i % 8}-0{1 + i % 9}-1{i % 10}",
            "title": unique(lambda: sentence(rng, topic, 7)),
            "abstract": unique(lambda: sentence(rng, topic, 50)),
            "claims": [sentence(rng, topic, 25) for _ in range(2)],
            "description": sentence(rng, topic, 80),
            "classifications": [f"G06F{i % 17}/{i % 5}0"],
            "applicant": f"Applicant {i}",
        }
        (mixed / "epo" / f"{doc['id']}.xml").write_text(patent_xml(doc))
    for i in range(15):
        topic = topics[(i + 3) % len(topics)]
        doc = {
            "id": "20130226771" if i == 0 else f"2013{i:07d}",
            "country": "US",
            "kind": "A1",
            "publication-date": f"2013-0{1 + i % 9}-2{i % 8}",
            "title": unique(lambda: sentence(rng, topic, 7)),
            "abstract": unique(lambda: sentence(rng, topic, 50)),
            "claims": [sentence(rng, topic, 25)],
            "classifications": [f"H04W{i % 13}/{i % 4}0"],
            "applicant": f"US Applicant {i}",
        }
        (mixed / "uspto" / f"US{doc['id']}.xml").write_text(patent_xml(doc))

    malformed = ROOT / "malformed"
    malformed.mkdir(parents=True, exist_ok=True)
    lines = []
    for i in range(7):
        lines.append(json.dumps({"id": f"M-{i}", "title": sentence(rng, "materials", 6),
                                 "abstract": sentence(rng, "materials", 30)}))
    lines.insert(2, '{"id": "M-bad", "title": "unterminated')
    lines.insert(5, json.dumps({"title": "A record without an identifier", "abstract": "No id here."}))
    lines.insert(8, json.dumps({"id": "M-empty", "title": "", "abstract": "   "}))
    (malformed / "mixed_quality.jsonl").write_text("\n".join(lines) + "\n")

    docdb = ROOT / "docdb"
    docdb.mkdir(parents=True, exist_ok=True)
    record = {
        "id": "EP3000001A1",
        "country": "EP",
        "kind": "A1",
        "publication-date": "2016-03-30",
        "title": "Bibliographic record without text body",
        "classifications": ["B60R21/00"],
        "applicant": "Example Applicant",
    }
    (docdb / "EP3000001A1.xml").write_text(patent_xml(record, docdb=True))


if __name__ == "__main__":
    main()
