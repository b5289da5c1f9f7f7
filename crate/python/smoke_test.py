"""Smoke test for the tedkit Python extension.

Build and install the module first, e.g.
    pip install maturin
    maturin build --release -m crates/python/Cargo.toml
    pip install target/wheels/tedkit-*.whl
"""

import json

import tedkit

positions = tedkit.enumerate_positions()
assert len(positions) == 4520, len(positions)
assert positions[0] == ([], [])

assert tedkit.label_move([], []) == (4, "Empty")
assert tedkit.label_move([0, 8], [3, 4]) == (5, "Block")
assert tedkit.featurize([], []) == [0.0] * 18 + [1.0]

assert tedkit.loan_rule_label(30, 75, 50) == ("good", "GoodRule1")
assert tedkit.loan_rule_label(10, 75, 50) == ("delinquent", "LoTrades_EREViolated")

ttt = tedkit.tictactoe_dataset()
codec = tedkit.Codec(ttt["labels"], ttt["explanations"], ttt["label_names"], ttt["explanation_names"])
assert len(codec) <= 36
assert not codec.is_functional
for composite, pair in enumerate(codec.pairs()):
    assert codec.encode(*pair) == composite
    assert codec.decode(composite) == pair
assert json.loads(codec.to_json())["labels"] == ttt["label_names"]
assert tedkit.Codec.from_json(codec.to_json()).pairs() == codec.pairs()

loan = tedkit.loan_dataset(n=2000, seed=3)
assert len(loan["features"]) == 2000 and len(loan["feature_names"]) == 8
loan_codec = tedkit.Codec(
    loan["labels"], loan["explanations"], loan["label_names"], loan["explanation_names"]
)
assert loan_codec.is_functional

report = tedkit.run_experiment("loan", "ted", "forest", seed=1, n=2000, trees=20, derive_y_from_e=True)
assert report["e_accuracy"] > 0.9, report

model = tedkit.Model.fit("tictactoe", "ted", "mlp", seed=0, epochs=5)
again = tedkit.Model.from_json(model.to_json())
row = tedkit.featurize([], [])
assert model.predict([row]) == again.predict([row])
label, explanation, score = model.predict([row])[0]
assert explanation in ("Win", "Block", "Threat", "Empty") and 0.0 < score <= 1.0

try:
    tedkit.label_move([0, 1, 2], [3, 4])
except ValueError:
    pass
else:
    raise AssertionError("terminal board accepted")

print("python smoke test passed")
