"""Walk through the quantum embedding core: states, circuits, expectations.

Run with: python demos/01_quantum_embedding.py
"""

import numpy as np

from qimpute import (
    IqpParams,
    StateVector,
    apply_hadamard_layer,
    circuit_state,
    iqp_embed,
    oracle_apply,
    z_expectations,
)

# An n-qubit state is just 2^n complex amplitudes; |000> puts all weight
# on basis index 0.
state = StateVector.zero_state(3)
print("zero state amplitudes:", np.round(state.amplitudes, 3))

# A Hadamard layer spreads it uniformly; applying it twice returns home.
plus = apply_hadamard_layer(state)
print("after H on every qubit:", np.round(plus.amplitudes, 3))
back = apply_hadamard_layer(plus)
print("H twice restores |000>:", np.round(back.amplitudes, 3))

# The embedding circuit sandwiches a data-controlled diagonal phase between
# Hadamard layers. For one qubit and one layer the Z expectation has a
# closed form: <Z> = cos(2 theta).
print("\nsingle-qubit sweep: <Z> vs cos(2 theta)")
for theta in (0.0, 0.3, np.pi / 4, 1.0):
    params = IqpParams(1, 1, np.array([[theta]]), np.zeros((1, 0)))
    got = iqp_embed(params).values[0]
    print(f"  theta={theta:.3f}  <Z>={got:+.6f}  cos(2t)={np.cos(2 * theta):+.6f}")

# With more qubits the pairwise angles entangle them, and the vector of
# per-qubit Z expectations becomes a rich nonlinear function of the angles.
rng = np.random.default_rng(0)
params = IqpParams(
    n_qubits=4,
    n_layers=2,
    singles=rng.uniform(-np.pi, np.pi, size=(2, 4)),
    pairs=rng.uniform(-np.pi, np.pi, size=(2, 6)),
)
embedding = iqp_embed(params)
print("\n4-qubit embedding:", np.round(embedding.values, 4))

# The fast simulator is checked against a dense-matrix oracle that builds
# the full 2^n x 2^n unitary explicitly.
fast = circuit_state(params)
dense = oracle_apply(params)
gap = np.max(np.abs(fast.amplitudes - dense.amplitudes))
print("max |fast - oracle| amplitude difference:", gap)
assert gap < 1e-10
print("oracle expectations match:",
      np.allclose(z_expectations(dense).values, embedding.values, atol=1e-12))
