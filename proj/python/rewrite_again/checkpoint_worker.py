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

"""Line-oriented JSON worker serving pretrained checkpoints to the C++ core.

Reads one request object per line on stdin and answers with one reply per
line on stdout. Requires torch, transformers and sentence-transformers.
"""

import hashlib
import json
import os
import random
import sys


def _reply(ok=True, **fields):
    fields["ok"] = ok
    return fields


class Seq2SeqServer:
    def __init__(self):
        self.model = None
        self.tokenizer = None
        self.checkpoint = None
        self.options = {}
        self.settings = {}

    def info(self):
        return {
            "vocab_size": int(self.model.config.vocab_size),
            "max_length": int(self.options.get("max_length", 512)),
            "eos_token": int(self.tokenizer.eos_token_id),
            "supports_latent": bool(self.options.get("latent", False)),
        }

    def load(self, checkpoint, options):
        import torch
        from transformers import AutoModelForSeq2SeqLM, AutoTokenizer

        self.checkpoint = checkpoint
        self.options = options
        self.tokenizer = AutoTokenizer.from_pretrained(checkpoint)
        self.model = AutoModelForSeq2SeqLM.from_pretrained(checkpoint)
        self.model.eval()
        torch.set_grad_enabled(False)
        return self.info()

    def _decoder_ids(self, generated):
        import torch

        start = self.model.config.decoder_start_token_id
        return torch.tensor([[start] + list(generated)])

    def next_token_logits(self, prompt, generated):
        import torch

        out = self.model(input_ids=torch.tensor([prompt]),
                         decoder_input_ids=self._decoder_ids(generated))
        return out.logits[0, -1, : self.model.config.vocab_size].tolist()

    def _latent_length(self):
        return int(self.options.get("latent_tokens", 64))

    def encode(self, text):
        enc = self.tokenizer(text, return_tensors="pt", truncation=True,
                             max_length=self._latent_length(), padding="max_length")
        hidden = self.model.get_encoder()(**enc).last_hidden_state
        return hidden.flatten().tolist()

    def decode_from_latent(self, latent, seed):
        import torch
        from transformers.modeling_outputs import BaseModelOutput

        torch.manual_seed(seed % (2**63))
        d = self.model.config.d_model
        hidden = torch.tensor(latent, dtype=torch.float32).reshape(1, -1, d)
        out = self.model.generate(encoder_outputs=BaseModelOutput(last_hidden_state=hidden),
                                  max_new_tokens=int(self.options.get("max_length", 512)))
        return self.tokenizer.decode(out[0], skip_special_tokens=True)

    def fit(self, pairs, config):
        import torch

        rng = random.Random(config["seed"])
        torch.manual_seed(config["seed"])
        self.model.train()
        torch.set_grad_enabled(True)
        optimizer = torch.optim.AdamW(self.model.parameters(), lr=config["learning_rate"])
        batch_size = int(self.options.get("batch_size", 8))
        order = list(range(len(pairs)))
        for _ in range(config["epochs"]):
            rng.shuffle(order)
            for start in range(0, len(order), batch_size):
                batch = [pairs[i] for i in order[start:start + batch_size]]
                enc = self.tokenizer([p["source"] for p in batch], return_tensors="pt",
                                     padding=True, truncation=True,
                                     max_length=config["max_source_length"])
                labels = self.tokenizer([p["target"] for p in batch], return_tensors="pt",
                                        padding=True, truncation=True,
                                        max_length=config["max_target_length"]).input_ids
                labels[labels == self.tokenizer.pad_token_id] = -100
                loss = self.model(**enc, labels=labels).loss
                loss.backward()
                optimizer.step()
                optimizer.zero_grad()
        self.model.eval()
        torch.set_grad_enabled(False)
        self.settings = {"optimizer": "AdamW", "batch_size": batch_size,
                         "learning_rate": config["learning_rate"], "epochs": config["epochs"]}

    def save(self, directory):
        self.model.save_pretrained(directory)
        self.tokenizer.save_pretrained(directory)
        with open(os.path.join(directory, "worker_options.json"), "w") as f:
            json.dump(self.options, f)

    def load_state(self, directory):
        options = {}
        path = os.path.join(directory, "worker_options.json")
        if os.path.exists(path):
            with open(path) as f:
                options = json.load(f)
        return self.load(directory, options)


class EncoderServer:
    def __init__(self):
        self.model = None

    def load(self, checkpoint):
        from sentence_transformers import SentenceTransformer

        self.model = SentenceTransformer(checkpoint, device="cpu")

    def embed(self, texts):
        return self.model.encode(list(texts), convert_to_numpy=True).tolist()


class ClassifierServer:
    def __init__(self):
        self.model = None
        self.tokenizer = None
        self.labels = []

    def fit(self, checkpoint, texts, labels, config, shuffle_seed):
        import torch
        from transformers import AutoModelForSequenceClassification, AutoTokenizer

        torch.manual_seed(config["seed"])
        self.labels = sorted(set(labels))
        index = {label: i for i, label in enumerate(self.labels)}
        self.tokenizer = AutoTokenizer.from_pretrained(checkpoint)
        self.model = AutoModelForSequenceClassification.from_pretrained(
            checkpoint, num_labels=max(len(self.labels), config["num_classes"]))
        optimizer = torch.optim.AdamW(self.model.parameters(), lr=config["learning_rate"])
        order = list(range(len(texts)))
        rng = random.Random(shuffle_seed)
        self.model.train()
        for _ in range(config["epochs"]):
            rng.shuffle(order)
            for start in range(0, len(order), 16):
                batch = order[start:start + 16]
                enc = self.tokenizer([texts[i] for i in batch], return_tensors="pt",
                                     padding=True, truncation=True, max_length=512)
                target = torch.tensor([index[labels[i]] for i in batch])
                loss = self.model(**enc, labels=target).loss
                loss.backward()
                optimizer.step()
                optimizer.zero_grad()
        self.model.eval()
        digest = hashlib.sha256()
        for name, tensor in sorted(self.model.state_dict().items()):
            digest.update(name.encode())
            digest.update(tensor.cpu().numpy().tobytes())
        return digest.hexdigest()

    def predict(self, texts):
        import torch

        with torch.no_grad():
            enc = self.tokenizer(list(texts), return_tensors="pt", padding=True,
                                 truncation=True, max_length=512)
            ids = self.model(**enc).logits.argmax(dim=-1).tolist()
        return [self.labels[i] if i < len(self.labels) else self.labels[0] for i in ids]


def handle(seq2seq, encoder, classifier, req):
    op = req.get("op")
    if op == "load":
        return _reply(info=seq2seq.load(req["checkpoint"], req.get("options", {})))
    if op == "load_state":
        return _reply(info=seq2seq.load_state(req["dir"]))
    if op == "tokenize":
        return _reply(tokens=seq2seq.tokenizer(req["text"]).input_ids)
    if op == "detokenize":
        return _reply(text=seq2seq.tokenizer.decode(req["tokens"], skip_special_tokens=True))
    if op == "next_token_logits":
        return _reply(logits=seq2seq.next_token_logits(req["prompt"], req["generated"]))
    if op == "encode":
        return _reply(latent=seq2seq.encode(req["text"]))
    if op == "decode_from_latent":
        return _reply(text=seq2seq.decode_from_latent(req["latent"], req["seed"]))
    if op == "fit":
        seq2seq.fit(req["pairs"], req["config"])
        return _reply()
    if op == "save":
        seq2seq.save(req["dir"])
        return _reply()
    if op == "trainer_settings":
        return _reply(settings=seq2seq.settings)
    if op == "load_encoder":
        encoder.load(req["checkpoint"])
        return _reply()
    if op == "embed":
        return _reply(vectors=encoder.embed(req["texts"]))
    if op == "classifier_fit":
        state = classifier.fit(req["checkpoint"], req["texts"], req["labels"], req["config"],
                               req["shuffle_seed"])
        return _reply(state_sha256=state)
    if op == "classifier_predict":
        return _reply(labels=classifier.predict(req["texts"]))
    return _reply(False, error="unknown op %r" % op)


def main():
    seq2seq, encoder, classifier = Seq2SeqServer(), EncoderServer(), ClassifierServer()
    for line in sys.stdin:
        if not line.strip():
            continue
        try:
            reply = handle(seq2seq, encoder, classifier, json.loads(line))
        except Exception as exc:  # reported to the caller, which raises
            reply = _reply(False, error="%s: %s" % (type(exc).__name__, exc))
        sys.stdout.write(json.dumps(reply) + "\n")
        sys.stdout.flush()


if __name__ == "__main__":
    main()
