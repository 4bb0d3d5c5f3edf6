from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FeatureVector:
    """Named, ordered real features describing one image."""

    names: tuple
    values: np.ndarray

    def __post_init__(self):
        names = tuple(self.names)
        values = np.array(self.values, dtype=np.float64).ravel()
        if len(names) != values.size:
            raise ValueError(f"{len(names)} names for {values.size} values")
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")
        if not np.all(np.isfinite(values)):
            bad = [n for n, v in zip(names, values) if not np.isfinite(v)]
            raise ValueError(f"non-finite feature values: {bad}")
        values.setflags(write=False)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.names)

    def __getitem__(self, name):
        return float(self.values[self.names.index(name)])

    def as_dict(self):
        return dict(zip(self.names, self.values.tolist()))
