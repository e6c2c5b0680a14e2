#!/usr/bin/env python3
"""JSON-lines backend for `probe` over Hugging Face transformers models.

Reads one request per line on stdin and answers one JSON object per line on
stdout. See `crates/probe/src/process.rs` for the protocol.

    python3 scripts/hf_backend.py --model bert-base-uncased
    python3 scripts/hf_backend.py --model gpt2 --family causal
    python3 scripts/hf_backend.py --random-tiny   # untrained tiny BERT, for smoke tests
"""

import argparse
import json
import math
import sys

import torch
import transformers as tf

# Seq2seq models score text in the decoder; the encoder sees this constant.
NEUTRAL_INSTRUCTION = ""


class BackendError(Exception):
    def __init__(self, message, kind="other", **extra):
        super().__init__(message)
        self.kind = kind
        self.extra = extra


def detect_family(config):
    if config.is_encoder_decoder:
        return "seq2seq"
    archs = " ".join(config.architectures or [])
    if "MaskedLM" in archs or config.model_type in {"bert", "roberta", "distilbert", "albert", "electra", "deberta", "deberta-v2"}:
        return "masked-encoder"
    return "causal"


class Backend:
    def __init__(self, args):
        torch.manual_seed(0)
        if args.random_tiny:
            config = tf.BertConfig(
                vocab_size=30522 if args.tokenizer else 128,
                hidden_size=32,
                num_hidden_layers=2,
                num_attention_heads=2,
                intermediate_size=64,
            )
            self.tokenizer = tf.AutoTokenizer.from_pretrained(args.tokenizer) if args.tokenizer else None
            self.model = tf.BertForMaskedLM(config)
            self.family = "masked-encoder"
            self.name = "random-tiny-bert"
        else:
            config = tf.AutoConfig.from_pretrained(args.model)
            self.family = args.family or detect_family(config)
            cls = {
                "masked-encoder": tf.AutoModelForMaskedLM,
                "causal": tf.AutoModelForCausalLM,
                "seq2seq": tf.AutoModelForSeq2SeqLM,
            }[self.family]
            self.tokenizer = tf.AutoTokenizer.from_pretrained(args.model, use_fast=True)
            self.model = cls.from_pretrained(args.model)
            self.name = args.model
        self.model.eval()
        self.model.to(args.device)
        self.device = args.device
        self.config = self.model.config

    # Tiny random models without a tokenizer use a character-level stand-in.
    def encode(self, text, offsets=False):
        if self.tokenizer is not None:
            enc = self.tokenizer(text, return_offsets_mapping=offsets, return_tensors="pt", truncation=False)
            return enc
        # "\x00" stands for the mask token (id 0).
        ids = [2] + [0 if c == "\x00" else 3 + (ord(c) % 120) for c in text] + [1]
        enc = {"input_ids": torch.tensor([ids]), "attention_mask": torch.ones(1, len(ids), dtype=torch.long)}
        if offsets:
            enc["offset_mapping"] = torch.tensor([[[0, 0]] + [[i, i + 1] for i in range(len(text))] + [[0, 0]]])
        return enc

    def max_length(self):
        n = getattr(self.config, "max_position_embeddings", None) or getattr(self.config, "n_positions", None)
        return n or 10**9

    def check_length(self, n):
        limit = self.max_length()
        if n > limit:
            raise BackendError(f"{n} tokens exceed the limit {limit}", "too_long", tokens=n, limit=limit)

    def describe(self, _req):
        return {
            "backend_id": self.name,
            "family": self.family,
            "num_layers": self.config.num_hidden_layers if hasattr(self.config, "num_hidden_layers") else self.config.num_layers,
            "hidden_size": self.config.hidden_size if hasattr(self.config, "hidden_size") else self.config.d_model,
        }

    @torch.no_grad()
    def embed(self, req):
        enc = self.encode(req["text"], offsets=True)
        offsets = enc.pop("offset_mapping")[0].tolist()
        self.check_length(enc["input_ids"].shape[1])
        enc = {k: v.to(self.device) for k, v in enc.items()}
        if self.family == "seq2seq":
            out = self.model.get_encoder()(**enc, output_hidden_states=True)
        else:
            out = self.model(**enc, output_hidden_states=True)
        hidden = out.hidden_states[1:]
        token_sets = []
        for start, end in req["spans"]:
            toks = [i for i, (a, b) in enumerate(offsets) if b > a and a < end and b > start]
            if not toks:
                raise BackendError(f"span {start}..{end} covers no token", "misaligned", start=start, end=end)
            token_sets.append(toks)
        return [[[layer[0, i].tolist() for i in toks] for toks in token_sets] for layer in hidden]

    def piece_text(self, token_id):
        if self.tokenizer is None:
            return chr(int(token_id) - 3) if token_id >= 3 else ""
        tok = self.tokenizer.convert_ids_to_tokens(int(token_id))
        if tok.startswith("##"):
            return tok[2:]
        return tok.replace("Ġ", " ").replace("▁", " ")

    @torch.no_grad()
    def next_distribution(self, prefix):
        if self.family == "causal":
            enc = self.encode(prefix)
            ids = enc["input_ids"].to(self.device)
            if ids.shape[1] == 0 and self.tokenizer.bos_token_id is not None:
                ids = torch.tensor([[self.tokenizer.bos_token_id]], device=self.device)
            logits = self.model(input_ids=ids).logits[0, -1]
        elif self.family == "seq2seq":
            enc = self.encode(NEUTRAL_INSTRUCTION)
            dec = self.tokenizer(prefix, add_special_tokens=False, return_tensors="pt")["input_ids"]
            start = torch.tensor([[self.config.decoder_start_token_id]])
            dec = torch.cat([start, dec], dim=1).to(self.device)
            logits = self.model(input_ids=enc["input_ids"].to(self.device), decoder_input_ids=dec).logits[0, -1]
        else:
            raise BackendError("next-token distribution needs a generative model", "unsupported")
        return torch.log_softmax(logits.float(), dim=-1)

    def next_tokens(self, req):
        logp = self.next_distribution(req["prefix"])
        top = torch.topk(logp, min(req["n"], logp.shape[0]))
        return [[self.piece_text(i), math.exp(v)] for v, i in zip(top.values.tolist(), top.indices.tolist())]

    @torch.no_grad()
    def fill_mask(self, req):
        if self.family != "masked-encoder":
            raise BackendError("fill_mask needs a masked encoder", "unsupported")
        mask, mask_id = ("\x00", 0) if self.tokenizer is None else (self.tokenizer.mask_token, self.tokenizer.mask_token_id)
        enc = self.encode(req["text"].replace("[MASK]", mask))
        ids = enc["input_ids"].to(self.device)
        pos = (ids[0] == mask_id).nonzero().flatten().tolist()
        if len(pos) != 1:
            raise BackendError(f"expected one mask, found {len(pos)}")
        logits = self.model(input_ids=ids, attention_mask=enc["attention_mask"].to(self.device)).logits[0, pos[0]]
        probs = torch.softmax(logits.float(), dim=-1)
        top = torch.topk(probs, req["k"])
        return [[self.piece_text(i).strip(), p] for p, i in zip(top.values.tolist(), top.indices.tolist())]

    @torch.no_grad()
    def token_logprobs(self, req):
        text = req["text"]
        if self.family == "masked-encoder":
            enc = self.encode(text)
            ids = enc["input_ids"][0]
            self.check_length(len(ids))
            special = set(self.tokenizer.all_special_ids) if self.tokenizer is not None else {1, 2}
            positions = [i for i, t in enumerate(ids.tolist()) if t not in special]
            if not positions:
                raise BackendError("empty input", "empty")
            batch = ids.repeat(len(positions), 1)
            mask_id = self.tokenizer.mask_token_id if self.tokenizer is not None else 0
            for row, i in enumerate(positions):
                batch[row, i] = mask_id
            logits = self.model(input_ids=batch.to(self.device)).logits
            logp = torch.log_softmax(logits.float(), dim=-1)
            return [logp[row, i, ids[i]].item() for row, i in enumerate(positions)]
        if self.family == "causal":
            ids = self.tokenizer(text, return_tensors="pt")["input_ids"][0]
            bos = self.tokenizer.bos_token_id
            if bos is not None and (len(ids) == 0 or ids[0].item() != bos):
                ids = torch.cat([torch.tensor([bos]), ids])
            self.check_length(len(ids))
            logits = self.model(input_ids=ids[None].to(self.device)).logits[0]
            logp = torch.log_softmax(logits.float(), dim=-1)
            return [logp[i - 1, ids[i]].item() for i in range(1, len(ids))]
        enc = self.encode(NEUTRAL_INSTRUCTION)
        labels = self.tokenizer(text, return_tensors="pt")["input_ids"]
        logits = self.model(input_ids=enc["input_ids"].to(self.device), labels=labels.to(self.device)).logits[0]
        logp = torch.log_softmax(logits.float(), dim=-1)
        return [logp[i, t].item() for i, t in enumerate(labels[0].tolist())]

    def continuation_probs(self, req):
        logp = self.next_distribution(req["prompt"])
        out = []
        for variants in req["variants"]:
            ids = set()
            for v in variants:
                toks = self.tokenizer(v, add_special_tokens=False)["input_ids"]
                if len(toks) == 1:
                    ids.add(toks[0])
            out.append(sum(math.exp(logp[i].item()) for i in ids))
        return out


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--model", default="bert-base-uncased")
    ap.add_argument("--family", choices=["masked-encoder", "causal", "seq2seq"])
    ap.add_argument("--device", default="cuda" if torch.cuda.is_available() else "cpu")
    ap.add_argument("--random-tiny", action="store_true")
    ap.add_argument("--tokenizer", help="tokenizer for --random-tiny (default: character stand-in)")
    args = ap.parse_args()
    backend = Backend(args)
    ops = {
        "describe": backend.describe,
        "embed": backend.embed,
        "fill_mask": backend.fill_mask,
        "next_tokens": backend.next_tokens,
        "token_logprobs": backend.token_logprobs,
        "continuation_probs": backend.continuation_probs,
    }
    for line in sys.stdin:
        if not line.strip():
            continue
        try:
            req = json.loads(line)
            op = ops.get(req.get("op"))
            if op is None:
                raise BackendError(f"unknown op {req.get('op')!r}", "unsupported")
            reply = {"ok": op(req)}
        except BackendError as e:
            reply = {"error": str(e), "kind": e.kind, **e.extra}
        except Exception as e:  # surfaced to the caller as a backend error
            reply = {"error": f"{type(e).__name__}: {e}", "kind": "other"}
        sys.stdout.write(json.dumps(reply) + "\n")
        sys.stdout.flush()


if __name__ == "__main__":
    main()
