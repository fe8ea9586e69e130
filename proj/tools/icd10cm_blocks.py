#!/usr/bin/env python3
"""Extract the ICD-10-CM chapter/block placement of every 3-character category
from a CMS tabular XML file.

Output (TSV, one line per category):  category<TAB>block<TAB>chapter
The result feeds the CLI `--blocks` flag / `Icd10CmOptions::blocks_tsv`.
"""
import sys
import xml.etree.ElementTree as ET


def main():
    if len(sys.argv) != 3:
        sys.exit("usage: icd10cm_blocks.py TABULAR.xml OUT.tsv")
    root = ET.parse(sys.argv[1]).getroot()
    rows = []
    for chapter in root.iter("chapter"):
        chapter_id = "CH" + chapter.findtext("name").strip()
        for section in chapter.iter("section"):
            block = section.get("id")
            for diag in section.findall("diag"):
                rows.append((diag.findtext("name").strip(), block, chapter_id))
    with open(sys.argv[2], "w", encoding="utf-8") as out:
        out.write("# category\tblock\tchapter\n")
        for row in rows:
            out.write("\t".join(row) + "\n")


if __name__ == "__main__":
    main()
