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

"""Minimal line-protocol worker used to exercise the external backend client."""

import json
import os
import sys

VOCAB = ["a", "b", "c", "<eos>"]
EOS = 3


class State:
    def __init__(self):
        self.memory = {}

    def info(self):
        return {"vocab_size": len(VOCAB), "max_length": 8, "eos_token": EOS,
                "supports_latent": True}


def handle(state, req):
    op = req["op"]
    if op == "load":
        if req["checkpoint"] == "broken":
            return {"ok": False, "error": "cannot load checkpoint broken"}
        return {"ok": True, "info": state.info()}
    if op == "load_state":
        with open(os.path.join(req["dir"], "fake_memory.json")) as f:
            state.memory = json.load(f)
        return {"ok": True, "info": state.info()}
    if op == "tokenize":
        return {"ok": True, "tokens": [VOCAB.index(w) for w in req["text"].split() if w in VOCAB[:3]]}
    if op == "detokenize":
        return {"ok": True, "text": " ".join(VOCAB[t] for t in req["tokens"])}
    if op == "next_token_logits":
        prompt, generated = req["prompt"], req["generated"]
        key = " ".join(VOCAB[t] for t in prompt)
        target = state.memory.get(key)
        if target is not None:
            words = target.split()
            nxt = VOCAB.index(words[len(generated)]) if len(generated) < len(words) else EOS
        else:
            nxt = prompt[len(generated)] if len(generated) < len(prompt) else EOS
        logits = [0.0] * len(VOCAB)
        logits[nxt] = 5.0
        return {"ok": True, "logits": logits}
    if op == "encode":
        return {"ok": True, "latent": [float(len(req["text"])), 1.0]}
    if op == "decode_from_latent":
        return {"ok": True, "text": "a b"}
    if op == "fit":
        for pair in req["pairs"]:
            state.memory[pair["source"]] = pair["target"]
        return {"ok": True}
    if op == "save":
        os.makedirs(req["dir"], exist_ok=True)
        with open(os.path.join(req["dir"], "fake_memory.json"), "w") as f:
            json.dump(state.memory, f)
        return {"ok": True}
    if op == "trainer_settings":
        return {"ok": True, "settings": {"optimizer": "none"}}
    if op == "load_encoder":
        return {"ok": True}
    if op == "embed":
        return {"ok": True, "vectors": [[1.0, float(len(t))] for t in req["texts"]]}
    if op == "crash":
        sys.exit(3)
    return {"ok": False, "error": "unknown op " + op}


def main():
    state = State()
    for line in sys.stdin:
        reply = handle(state, json.loads(line))
        sys.stdout.write(json.dumps(reply) + "\n")
        sys.stdout.flush()


if __name__ == "__main__":
    main()
