#!/usr/bin/env python3
"""Regenerates the toy fixture data files in this directory.

Two mirrored directions (en queries vs fr docs, fr queries vs en docs),
50 docs and 20 queries each. The vocabulary is engineered so that:
  - scripted query translations use tokens absent from every document
    (baseline Recall@10 is exactly 0), and
  - scripted pseudo-documents reproduce the unique vocabulary of the
    query's primary relevant document (expansion ranks it first).
Queries 0..4 carry a second relevant doc that no pseudo-document mentions,
so their Recall@10 under expansion is 1/2; the per-direction mean is
(5 * 0.5 + 15 * 1) / 20 = 0.875. Those two constants are frozen in
tests/golden/toy/recall10.csv.

The mock script must anticipate every prompt the gateway builds; the
template strings below mirror the fixed prompts and are exercised against
them by the prompt golden tests.
"""

import json
import os

HERE = os.path.dirname(os.path.abspath(__file__))

N_DOCS = 50
N_QUERIES = 20
STRATEGIES = ["zs", "cot", "rar", "fs"]

TRANSLATE = "Translate the following text from {src} to {tgt}:\n{text}"
ZS = "Please write a passage to answer the question.\nQuestion: {q}"
COT = "Answer the following query, give the rationale before answering: {q}"
RAR = "Rephrase and expand the question, and respond. {q}"
FS_SUFFIX = "\n\nQuery: {q}\nPassage:"  # final block of the few-shot prompt


def direction(src, src_name, tgt, tgt_name, doc_prefix, query_prefix,
              doc_vocab, query_text, translated_text, foreign_pseudo):
    docs = []
    for i in range(N_DOCS):
        doc = {"id": f"{doc_prefix}{i:02d}", "lang": tgt}
        if i % 2 == 0:
            doc["title"] = f"{'titre' if tgt == 'fr' else 'head'} {i}"
        doc["text"] = doc_vocab(i)
        docs.append(doc)

    queries = [(f"{query_prefix}{i:02d}", query_text(i)) for i in range(N_QUERIES)]

    qrels = []
    for i in range(N_QUERIES):
        qrels.append((f"{query_prefix}{i:02d}", f"{doc_prefix}{i:02d}", 1 + i % 3))
        if i < 5:
            qrels.append((f"{query_prefix}{i:02d}", f"{doc_prefix}{20 + i:02d}", 1))
        elif i < 10:
            qrels.append((f"{query_prefix}{i:02d}", f"{doc_prefix}{25 + i:02d}", 0))
    qrels.sort()

    rules = []
    for i in range(N_QUERIES):
        q = query_text(i)
        tq = translated_text(i)
        vocab = doc_vocab(i).rsplit(" ", 1)[0]  # drop the shared filler token

        def exact(match, response):
            rules.append({"match": match, "response": response, "mode": "exact"})

        def substr(match, response):
            rules.append({"match": match, "response": response, "mode": "substring"})

        exact(TRANSLATE.format(src=src_name, tgt=tgt_name, text=q), tq)
        # translate-then-expand: the model sees the translated query
        exact(ZS.format(q=tq), f"{vocab} xzs")
        exact(COT.format(q=tq), f"{vocab} xcot")
        exact(RAR.format(q=tq), f"{vocab} xrar")
        substr(FS_SUFFIX.format(q=tq), f"{vocab} xfs")
        # expand-then-translate: source-language pseudo, translated after
        for name, template in (("zs", ZS), ("cot", COT), ("rar", RAR)):
            exact(template.format(q=q), foreign_pseudo(i, name))
        substr(FS_SUFFIX.format(q=q), foreign_pseudo(i, "fs"))
        for name in STRATEGIES:
            exact(TRANSLATE.format(src=src_name, tgt=tgt_name,
                                   text=foreign_pseudo(i, name)),
                  f"{vocab} x{name}t")
    return docs, queries, qrels, rules


def main():
    en_fr = direction(
        "en", "English", "fr", "French", "fr", "enq",
        doc_vocab=lambda i: f"sujet{i} theme{i} point{i} commun",
        query_text=lambda i: f"mystery{i} clue{i}",
        translated_text=lambda i: f"absentq{i} absentr{i}",
        foreign_pseudo=lambda i, s: f"enpd {s} {i}",
    )
    fr_en = direction(
        "fr", "French", "en", "English", "en", "frq",
        doc_vocab=lambda i: f"topic{i} detail{i} note{i} shared",
        query_text=lambda i: f"requete{i} terme{i}",
        translated_text=lambda i: f"missing{i}a missing{i}b",
        foreign_pseudo=lambda i, s: f"frpd {s} {i}",
    )

    def dump(name, content):
        with open(os.path.join(HERE, name), "w", encoding="utf-8", newline="\n") as f:
            f.write(content)

    def jsonl(records):
        return "".join(
            json.dumps(r, ensure_ascii=False, separators=(",", ":")) + "\n"
            for r in records)

    dump("docs.fr.jsonl", jsonl(en_fr[0]))
    dump("docs.en.jsonl", jsonl(fr_en[0]))
    dump("queries.en.tsv", "".join(f"{qid}\t{text}\n" for qid, text in en_fr[1]))
    dump("queries.fr.tsv", "".join(f"{qid}\t{text}\n" for qid, text in fr_en[1]))
    dump("qrels.en-fr.txt", "".join(f"{q} 0 {d} {g}\n" for q, d, g in en_fr[2]))
    dump("qrels.fr-en.txt", "".join(f"{q} 0 {d} {g}\n" for q, d, g in fr_en[2]))
    dump("mock.jsonl", jsonl(en_fr[3] + fr_en[3]))
    dump("pool.jsonl", jsonl(
        {"query": f"exq{k}", "passage": f"exp{k} alpha beta"} for k in range(8)))


if __name__ == "__main__":
    main()
