# Copyright 2026 The OKGIT Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Exports a wordpiece masked language model into the okgit model layout.

Produces <out>/config.json, <out>/vocab.txt and <out>/params.bin (the
little-endian named-tensor stream the C++ side reads). Works with
BERT-family checkpoints whose tokenizer is WordPiece; byte-BPE models are
not supported by the C++ tokenizer and are rejected.

Usage:
    python tools/export_hf_mlm.py --model bert-base-uncased --out models/base
    python tools/export_hf_mlm.py --model bert-large-uncased --out models/large
"""

import argparse
import json
import os
import struct
import sys


def write_tensor(fh, name, array):
    data = array.astype("float32")
    name_bytes = name.encode("utf-8")
    fh.write(struct.pack("<I", len(name_bytes)))
    fh.write(name_bytes)
    dims = list(data.shape) if data.ndim > 1 else [data.shape[0], 1]
    fh.write(struct.pack("<I", len(dims)))
    for d in dims:
        fh.write(struct.pack("<I", d))
    fh.write(data.reshape(-1).tobytes())


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--model", required=True,
                        help="checkpoint name or local path")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--name", default=None,
                        help="model_name recorded in config.json")
    args = parser.parse_args()

    import torch  # noqa: F401  (forces a clear error before transformers)
    from transformers import AutoModelForMaskedLM, AutoTokenizer

    tokenizer = AutoTokenizer.from_pretrained(args.model)
    if not hasattr(tokenizer, "vocab"):
        sys.exit("error: tokenizer has no wordpiece vocabulary; "
                 "only BERT-family models are supported")
    model = AutoModelForMaskedLM.from_pretrained(args.model)
    model.eval()
    state = {k: v.detach().cpu().numpy() for k, v in model.state_dict().items()}

    def pick(*names):
        for n in names:
            if n in state:
                return state[n]
        raise KeyError(f"none of {names} in the checkpoint")

    cfg = model.config
    os.makedirs(args.out, exist_ok=True)

    vocab = sorted(tokenizer.vocab.items(), key=lambda kv: kv[1])
    with open(os.path.join(args.out, "vocab.txt"), "w", encoding="utf-8") as fh:
        for token, _ in vocab:
            fh.write(token + "\n")

    lowercase = bool(getattr(tokenizer, "do_lower_case", True))
    with open(os.path.join(args.out, "config.json"), "w") as fh:
        json.dump(
            {
                "vocab_size": cfg.vocab_size,
                "hidden_size": cfg.hidden_size,
                "num_layers": cfg.num_hidden_layers,
                "num_heads": cfg.num_attention_heads,
                "intermediate_size": cfg.intermediate_size,
                "max_position": cfg.max_position_embeddings,
                "layer_norm_eps": cfg.layer_norm_eps,
                "lowercase": lowercase,
                "model_name": args.name or args.model,
            },
            fh,
            indent=2,
        )

    prefix = "bert." if any(k.startswith("bert.") for k in state) else ""
    emb = prefix + "embeddings."
    with open(os.path.join(args.out, "params.bin"), "wb") as fh:
        write_tensor(fh, "embeddings.word", pick(emb + "word_embeddings.weight"))
        write_tensor(fh, "embeddings.position",
                     pick(emb + "position_embeddings.weight"))
        write_tensor(fh, "embeddings.token_type",
                     pick(emb + "token_type_embeddings.weight"))
        write_tensor(fh, "embeddings.ln.gamma", pick(emb + "LayerNorm.weight"))
        write_tensor(fh, "embeddings.ln.beta", pick(emb + "LayerNorm.bias"))

        for layer in range(cfg.num_hidden_layers):
            src = f"{prefix}encoder.layer.{layer}."
            dst = f"layer.{layer}."
            for ours, theirs in [("attn.q", "attention.self.query"),
                                 ("attn.k", "attention.self.key"),
                                 ("attn.v", "attention.self.value"),
                                 ("attn.out", "attention.output.dense")]:
                write_tensor(fh, dst + ours + ".w", pick(src + theirs + ".weight"))
                write_tensor(fh, dst + ours + ".b", pick(src + theirs + ".bias"))
            write_tensor(fh, dst + "attn_ln.gamma",
                         pick(src + "attention.output.LayerNorm.weight"))
            write_tensor(fh, dst + "attn_ln.beta",
                         pick(src + "attention.output.LayerNorm.bias"))
            write_tensor(fh, dst + "ffn.w1", pick(src + "intermediate.dense.weight"))
            write_tensor(fh, dst + "ffn.b1", pick(src + "intermediate.dense.bias"))
            write_tensor(fh, dst + "ffn.w2", pick(src + "output.dense.weight"))
            write_tensor(fh, dst + "ffn.b2", pick(src + "output.dense.bias"))
            write_tensor(fh, dst + "ffn_ln.gamma",
                         pick(src + "output.LayerNorm.weight"))
            write_tensor(fh, dst + "ffn_ln.beta",
                         pick(src + "output.LayerNorm.bias"))

        write_tensor(fh, "mlm.transform.w",
                     pick("cls.predictions.transform.dense.weight"))
        write_tensor(fh, "mlm.transform.b",
                     pick("cls.predictions.transform.dense.bias"))
        write_tensor(fh, "mlm.ln.gamma",
                     pick("cls.predictions.transform.LayerNorm.weight"))
        write_tensor(fh, "mlm.ln.beta",
                     pick("cls.predictions.transform.LayerNorm.bias"))
        write_tensor(fh, "mlm.bias", pick("cls.predictions.bias"))

    print(f"exported {args.model} -> {args.out}")


if __name__ == "__main__":
    main()
