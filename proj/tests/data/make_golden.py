"""Writes golden_10k.conll: 10,000 tokens in canonical serialized form."""
import random
import sys

TYPES = """Access_To_Care Age Condition Diet Disability Education Employment Exercise
Family_Member Gender Geographic_Entity Housing Income Insurance_Status Language
Marital_Status Mental_Health Race_Ethnicity Severity Sexual_Orientation Social_Support
Spiritual_Beliefs Substance Treatment Vaccine Violence_Or_Abuse""".split()
PROVENANCE = [None, "subset1", "subset2", "subset3", "synthetic_host"]
WORDS = ["patient", "72", "year", "old", "woman", "smoker", "café", "(", ")", ",", ".", "3.5",
         "uninsured", "Naïve", "COVID-19", "x-ray", "#1", "mg/dL", "°C", "well-off"]


def sentence(rng, n):
    toks = []
    while len(toks) < n:
        if rng.random() < 0.6:
            toks.append("O")
            continue
        t = rng.choice(TYPES)
        toks.append("B-" + t)
        for _ in range(rng.randrange(3)):
            if len(toks) < n:
                toks.append("I-" + t)
    return toks


def conf(rng):
    if rng.random() < 0.5:
        return ""
    return "\t%.4f" % (rng.randrange(10000) / 10000.0)


def main(path):
    rng = random.Random(10000)
    out = []
    total = 0
    doc = 0
    while total < 10000:
        doc += 1
        prov = rng.choice(PROVENANCE)
        out.append("-DOCSTART- doc-%04d%s\n" % (doc, " " + prov if prov else ""))
        for s in range(rng.randrange(1, 6)):
            n = min(rng.randrange(1, 40), 10000 - total)
            if n == 0:
                break
            if rng.random() < 0.1:
                out.append("# synthetic_id = SYN-train-%05d\n" % (doc * 10 + s))
            for label in sentence(rng, n):
                out.append("%s\t%s%s\n" % (rng.choice(WORDS), label, conf(rng)))
            out.append("\n")
            total += n
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("".join(out))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "golden_10k.conll")
