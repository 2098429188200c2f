"""Small models on which the brute-force joint law is cheap."""
import itertools

from growthnet import build_model

KAPPAS = (0.5, 1.0, 2.0, 8.0)


def grid_models():
    models = []
    for m in (1, 3, 6, 12):
        for kappa in KAPPAS:
            models.append(build_model(m, [(kappa, 1)]))
            models.append(build_model(m, [(kappa, 3)]))
        for k1, k2 in itertools.combinations(KAPPAS, 2):
            models.append(build_model(m, [(k1, 1), (k2, 2)]))
        models.append(build_model(m, [(0.5, 2), (2.0, 1), (8.0, 1)]))
        models.append(build_model(m, [(1.0, 1), (2.0, 1), (8.0, 2)]))
    return models
