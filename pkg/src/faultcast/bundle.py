"""Persisted end-to-end model: vocabulary, policy, transform and classifier.

A bundle is a directory with ``bundle.json`` (method, vocabulary, policy,
ridge model) and ``transform.npz`` (fitted transform parameters).  It is
everything needed to score fresh states files.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .dataset import DatasetManifest, LabelPolicy, build_dataset
from .eventlog import CommandVocabulary
from .ridge import RidgeFailureClassifier
from .transforms import HydraTransform, MiniRocketTransform, RocketTransform

_TRANSFORMS = {
    "rocket": RocketTransform,
    "minirocket": MiniRocketTransform,
    "hydra": HydraTransform,
}


@dataclass
class ModelBundle:
    method: str
    vocabulary: CommandVocabulary
    policy: LabelPolicy
    transform: object  # None for the non-temporal baseline
    classifier: RidgeFailureClassifier

    def save(self, directory) -> None:
        os.makedirs(directory, exist_ok=True)
        payload = {
            "method": self.method,
            "vocabulary": {
                "commands": list(self.vocabulary.commands),
                "overflow": self.vocabulary.overflow,
            },
            "policy": self.policy.to_dict(),
            "classifier": json.loads(self.classifier.to_json()),
        }
        if self.transform is not None:
            self.transform.save(os.path.join(directory, "transform.npz"))
        tmp = os.path.join(directory, "bundle.json.tmp")
        with open(tmp, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
        os.replace(tmp, os.path.join(directory, "bundle.json"))

    @classmethod
    def load(cls, directory) -> "ModelBundle":
        with open(os.path.join(directory, "bundle.json")) as fh:
            payload = json.load(fh)
        method = payload["method"]
        transform = None
        if method in _TRANSFORMS:
            transform = _TRANSFORMS[method].load(
                os.path.join(directory, "transform.npz")
            )
        return cls(
            method=method,
            vocabulary=CommandVocabulary(
                payload["vocabulary"]["commands"],
                overflow=payload["vocabulary"]["overflow"],
            ),
            policy=LabelPolicy.from_dict(payload["policy"]),
            transform=transform,
            classifier=RidgeFailureClassifier.from_json(
                json.dumps(payload["classifier"])
            ),
        )

    def predict_states(self, states):
        """Score every machine-day of a states file.

        Unknown commands fall into the frozen vocabulary's overflow pair.
        With no annotations available, counts accumulate over the whole
        observed span (a single open cycle), and every observed day gets a
        prediction.  Returns (machine, date, score, label) rows sorted by
        machine then date.
        """
        vocabulary = self.vocabulary
        if not vocabulary.overflow:
            vocabulary = vocabulary.with_overflow()
        policy = LabelPolicy(
            horizon_days=self.policy.horizon_days,
            include_failure_day=self.policy.include_failure_day,
            censored_handling="label_negative",  # keep every observed day
        )
        manifest = build_dataset(
            states, [], policy=policy, vocabulary=vocabulary
        )
        if manifest.n_samples == 0:
            return []
        features = self._featurize(manifest)
        scores = self.classifier.decision_function(features)
        labels = (scores > 0).astype(int)
        return [
            (s.machine_id, s.date, float(scores[i]), int(labels[i]))
            for i, s in enumerate(manifest.samples)
        ]

    @classmethod
    def fit(cls, manifest, method, params=None, alpha=1.0, seed=0,
            balanced=False) -> "ModelBundle":
        """Train a deployable bundle on the whole manifest.

        The vocabulary is frozen with the overflow channel pair and the
        tensor padded with two zero channels, so unseen commands at
        inference time map to existing transform channels.
        """
        params = params or {}
        vocabulary = manifest.vocabulary
        tensor = manifest.tensor().astype(np.float64)
        if not vocabulary.overflow:
            vocabulary = vocabulary.with_overflow()
            pad = np.zeros(
                (tensor.shape[0], 2, tensor.shape[2]), dtype=tensor.dtype
            )
            tensor = np.concatenate([tensor, pad], axis=1)
        labels = manifest.labels()
        classifier = RidgeFailureClassifier(alpha=alpha, balanced=balanced)
        if method in _TRANSFORMS:
            transform = _TRANSFORMS[method](random_state=seed, **params)
            transform.fit(tensor)
            features = transform.transform(tensor)
        elif method == "ridge-tabular":
            transform = None
            features = tensor[:, :, -1]
        else:
            raise ValueError(f"unknown method {method!r}")
        classifier.fit(features, labels)
        return cls(
            method=method,
            vocabulary=vocabulary,
            policy=manifest.policy,
            transform=transform,
            classifier=classifier,
        )

    def _featurize(self, manifest: DatasetManifest):
        tensor = manifest.tensor().astype(np.float64)
        if self.transform is None:
            # non-temporal ridge scores time slices; use the day's last
            # slice (the day's accumulated state)
            return tensor[:, :, -1]
        expected = self.transform.n_channels_in_
        if tensor.shape[1] != expected:
            raise ValueError(
                f"vocabulary channels {tensor.shape[1]} do not match the "
                f"fitted transform ({expected})"
            )
        return self.transform.transform(tensor)
