"""Joint extraction model: embedding, recurrent stack, and decoder heads.

A model owns a single parameter store holding the token embedding table,
one set of recurrent-cell parameters per layer, and the two table-filling
heads.  Layers alternate direction starting left-to-right, so the two-layer
bidirectional variant reads forward then backward; the decoders see the
per-layer streams side by side.
"""

from __future__ import annotations

from dataclasses import dataclass

from .autodiff import ParamStore, Record, Tensor, take
from .corpus import LabelSchema, MatchMode, Vocabulary
from .decoders import (ALPHA_BETA_GRID, DecoderParams, EntityLogits,
                       PredictionSet, RelationLogits, decode_streams,
                       threshold_predictions)
from .encoder import DamParams, encode_stacked

__all__ = ["ConfigError", "JointModel", "ModelConfig", "ModelForward",
           "VARIANTS"]

VARIANTS = ("darter", "bidarter")
_LAYERS_BY_VARIANT = {"darter": 1, "bidarter": 2}


class ConfigError(ValueError):
    """Raised when a model configuration is inconsistent."""


@dataclass(frozen=True)
class ModelConfig:
    variant: str = "darter"
    n_layers: int | None = None
    d_p: int = 32
    d_h: int = 32
    interaction: bool = True
    entity_features_in_re: bool = True
    alpha: float = 1.0
    beta: float = 1.0
    match_mode: MatchMode = MatchMode.EXACT
    mask_reversed_entity_cells: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; "
                              f"expected one of {VARIANTS}")
        if self.n_layers is None:
            object.__setattr__(self, "n_layers",
                               _LAYERS_BY_VARIANT[self.variant])
        if not isinstance(self.n_layers, int) or self.n_layers < 1:
            raise ConfigError("n_layers must be a positive integer")
        if self.variant == "bidarter" and self.n_layers != 2:
            raise ConfigError("the bidirectional variant uses exactly "
                              "2 layers")
        if self.d_p < 1:
            raise ConfigError("d_p must be at least 1")
        if self.d_h < 2:
            raise ConfigError("d_h must be at least 2 (pair normalization "
                              "needs two components)")
        for name, value in (("alpha", self.alpha), ("beta", self.beta)):
            if value not in ALPHA_BETA_GRID:
                raise ConfigError(
                    f"{name} must be one of {ALPHA_BETA_GRID}, got {value}")
        if not isinstance(self.match_mode, MatchMode):
            raise ConfigError("match_mode must be a MatchMode")

    def to_json(self) -> dict:
        return {
            "variant": self.variant,
            "n_layers": self.n_layers,
            "d_p": self.d_p,
            "d_h": self.d_h,
            "interaction": self.interaction,
            "entity_features_in_re": self.entity_features_in_re,
            "alpha": self.alpha,
            "beta": self.beta,
            "match_mode": self.match_mode.value,
            "mask_reversed_entity_cells": self.mask_reversed_entity_cells,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ModelConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config fields {sorted(unknown)}")
        values = dict(obj)
        if isinstance(values.get("match_mode"), str):
            values["match_mode"] = MatchMode.parse(values["match_mode"])
        return cls(**values)


@dataclass
class ModelForward:
    entities: EntityLogits
    relations: RelationLogits
    record: Record
    bound: dict[str, Tensor]


class JointModel:
    """Parameter store plus the forward pass from token ids to tables."""

    def __init__(self, config: ModelConfig, schema: LabelSchema,
                 vocab: Vocabulary):
        self.config = config
        self.schema = schema
        self.vocab = vocab
        store = ParamStore(config.seed)
        store.add_uniform("embedding", (vocab.size, config.d_p),
                          fan_in=config.d_p)
        for layer in range(config.n_layers):
            d_in = config.d_p if layer == 0 else config.d_h
            DamParams.register(store, f"dam{layer}", d_in, config.d_h)
        DecoderParams.register(store, "ner", config.n_layers, config.d_h,
                               schema.u)
        DecoderParams.register(store, "re", config.n_layers, config.d_h,
                               schema.v)
        self.store = store

    def forward(self, token_ids, recording: bool = True) -> ModelForward:
        config = self.config
        record = Record(recording=recording)
        bound = self.store.bind(record)
        x = take(bound["embedding"], token_ids, axis=0)
        layers = [DamParams.bind(bound, f"dam{layer}")
                  for layer in range(config.n_layers)]
        outs = encode_stacked(x, layers, interaction=config.interaction)
        entities, relations = decode_streams(
            outs,
            DecoderParams.bind(bound, "ner"),
            DecoderParams.bind(bound, "re"),
            config.alpha, config.beta,
            entity_features=config.entity_features_in_re)
        return ModelForward(entities=entities, relations=relations,
                            record=record, bound=bound)

    def predict_tokens(self, tokens) -> PredictionSet:
        forward = self.forward(self.vocab.encode(tokens), recording=False)
        return threshold_predictions(
            forward.entities, forward.relations,
            diagonal_only=self.config.match_mode is MatchMode.TAIL)

    def predict_corpus(self, sentences) -> list[PredictionSet]:
        return [self.predict_tokens(s.tokens) for s in sentences]
