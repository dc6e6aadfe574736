import random

from ikbench import gen
from ikbench.saturate import is_coherent
from ikbench.syntax import check_formula, free_vars


def test_random_formula_well_sorted():
    rng = random.Random(0)
    for _ in range(200):
        phi = gen.random_formula(gen.SMALL_SIG, rng, (), depth=3, width=3)
        check_formula(phi, gen.SMALL_SIG)
        assert not free_vars(phi)


def test_coherent_generator():
    rng = random.Random(1)
    for _ in range(100):
        T = gen.random_coherent_theory(rng)
        assert len(T.sig.constants()) <= 3 and len(T.sig.relations) <= 3
        s = gen.random_coherent_sequent(T.sig, rng)
        assert is_coherent(s.antecedent) and is_coherent(s.succedent)


def test_seeded_reproducibility():
    a = [gen.random_instance("dual-dist", random.Random(5))[2] for _ in range(3)]
    b = [gen.random_instance("dual-dist", random.Random(5))[2] for _ in range(3)]
    assert a == b


def test_random_bar_is_bar():
    from ikbench.calculus import check_bar
    rng = random.Random(2)
    for _ in range(100):
        gamma, d = rng.randint(1, 3), rng.randint(1, 3)
        assert check_bar(gamma, d, gen.random_bar(gamma, d, rng))
