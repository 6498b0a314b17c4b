# Copyright 2026 The Rewrite Again Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Generates the small review corpora under data/toy.

The private corpus carries a binary `gender` attribute whose value shifts the
word distribution, so attribute inference is learnable but not trivial.
"""

import argparse
import json
import pathlib
import random

SHARED = (
    "the food was good great fine okay bad slow fast service staff place "
    "price value order delivery room stay friendly rude clean dirty again "
    "would recommend never visit coffee pizza burger salad table wait time "
    "quality shop product return team quick helpful manager experience"
).split()

GROUP_WORDS = {
    "F": "lovely cozy dessert wine brunch cute decor cupcakes salon tea".split(),
    "M": "beer steak game wings parking truck grill sports garage cheap".split(),
}


def make_text(rng, label):
    length = rng.randint(6, 14)
    words = []
    for _ in range(length):
        if label is not None and rng.random() < 0.15:
            words.append(rng.choice(GROUP_WORDS[label]))
        elif label is None and rng.random() < 0.2:
            words.append(rng.choice(GROUP_WORDS[rng.choice("FM")]))
        else:
            words.append(rng.choice(SHARED))
    return " ".join(words)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data/toy")
    parser.add_argument("--private", type=int, default=200)
    parser.add_argument("--public", type=int, default=300)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "private.jsonl", "w", encoding="utf-8") as f:
        for i in range(args.private):
            label = "F" if rng.random() < 0.579 else "M"
            record = {"id": f"p{i:04d}", "text": make_text(rng, label),
                      "attributes": {"gender": label}}
            f.write(json.dumps(record) + "\n")
    with open(out / "public.jsonl", "w", encoding="utf-8") as f:
        for i in range(args.public):
            record = {"id": f"u{i:04d}", "text": make_text(rng, None)}
            f.write(json.dumps(record) + "\n")


if __name__ == "__main__":
    main()
