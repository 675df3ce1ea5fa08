"""Names and code ranges shared by every module."""

from __future__ import annotations

TRAITS = ("E", "N", "A", "C", "O")

TRAIT_NAMES = {
    "E": "Extraversion",
    "N": "Neuroticism",
    "A": "Agreeableness",
    "C": "Conscientiousness",
    "O": "Openness",
}

# order of the EncodedPredictors fields
PREDICTORS = (
    "growth",
    "gender",
    "hand",
    "education",
    "urban",
    "engnat",
    "orientation",
    "married",
    "family",
    "voted",
    "religion",
    "race",
)

# largest valid code per predictor; 0 always means missing
PREDICTOR_MAX = {
    "growth": 4,
    "gender": 3,
    "hand": 3,
    "education": 4,
    "urban": 3,
    "engnat": 2,
    "orientation": 5,
    "married": 3,
    "family": 3,
    "voted": 2,
    "religion": 12,
    "race": 5,
}

# predictors derived from a raw count rather than a recode map
BUCKETED = ("growth", "family")

# codes are carried as integers everywhere, but no ordering of these is defensible
NOMINAL_PREDICTORS = frozenset({"religion", "race"})

FACTOR_SETS = {
    "biological": ("growth", "gender", "hand"),
    "family": ("education", "urban", "engnat", "orientation", "married", "family"),
    "culture": ("religion", "race", "voted"),
}

CATEGORY_LABELS = {
    "growth": {1: "youth (12-24)", 2: "early adulthood (25-40)", 3: "late adulthood (41-60)", 4: "old age (61+)"},
    "gender": {1: "male", 2: "female", 3: "other"},
    "hand": {1: "right", 2: "left", 3: "both"},
    "education": {1: "less than high school", 2: "high school", 3: "university degree", 4: "graduate degree"},
    "urban": {1: "rural", 2: "suburban", 3: "urban"},
    "engnat": {1: "yes", 2: "no"},
    "orientation": {1: "heterosexual", 2: "bisexual", 3: "homosexual", 4: "asexual", 5: "other"},
    "married": {1: "never married", 2: "currently married", 3: "previously married"},
    "family": {1: "small (1-3)", 2: "medium (4-10)", 3: "large (11+)"},
    "voted": {1: "yes", 2: "no"},
    "religion": {
        1: "agnostic",
        2: "atheist",
        3: "buddhist",
        4: "christian (catholic)",
        5: "christian (mormon)",
        6: "christian (protestant)",
        7: "christian (other)",
        8: "hindu",
        9: "jewish",
        10: "muslim",
        11: "sikh",
        12: "other",
    },
    "race": {1: "asian", 2: "arab", 3: "black", 4: "indigenous australian, native american or white", 5: "other"},
}
