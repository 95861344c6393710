"""Tests for the abstract syntax, substitution and normal forms"""

import random

import pytest

from picost.frontend import parse_system
from picost.syntax import (
    NIL, STOP, Input, Match, Name, NameVal, New, Output, Owned, Owner, Par, Rec, RecVar, ResType, Str, SysNew,
    SysPar, Var, ZERO_TYPE, beta_normalize, canonical_key, collect_garbage, desugar_choice, free_names,
    fresh_name, par_systems, rename_system, struct_canonical, struct_eq, substitute, substitute_system,
    system_names, unwind_normalize,
)


def a(base: str) -> NameVal:
    return NameVal(Name(base))


def out(chan: str, body=STOP, *args) -> Output:
    return Output(a(chan), tuple(args), body)


class TestNames:
    """Test names, owners and resource types"""

    def test_name_printing(self):
        """Test suffixed names print as base#k"""
        assert str(Name("r")) == "r"
        assert str(Name("r", 2)) == "r#2"

    def test_fresh_name_supply(self):
        """Test the fresh supply skips taken names in order"""
        assert fresh_name("r", set()) == Name("r")
        assert fresh_name("r", {Name("r")}) == Name("r", 1)
        assert fresh_name("r", {Name("r"), Name("r", 1)}) == Name("r", 2)

    def test_negative_costs_rejected(self):
        """Test resource costs must be naturals"""
        with pytest.raises(ValueError):
            ResType(-1, 0)


class TestFreeNames:
    """Test free name computation"""

    def test_nil(self):
        """Test nil has no free names"""
        assert free_names(NIL) == frozenset()

    def test_book_process(self):
        """Test the free names of the book prodding process"""
        book = Owned(Owner("pub"), Output(a("goLib"), (Str("dune"),), Input(a("goHome"), ("x",), STOP)))
        assert free_names(book) == {Name("goLib"), Name("goHome")}

    def test_restriction_binds(self):
        """Test restricted names are not free"""
        assert free_names(SysNew(Name("r"), ZERO_TYPE, Owned(Owner("o"), out("r")))) == frozenset()


class TestSubstitution:
    """Test capture-avoiding substitution"""

    def test_single_occurrence(self):
        """Test a variable subject is replaced"""
        t = Output(Var("x"), (), STOP)
        assert substitute(t, "x", a("a")) == out("a")

    def test_shadowed_binder(self):
        """Test an input binder shadows the substituted variable"""
        t = Input(a("a"), ("x",), Output(Var("x"), (), STOP))
        assert substitute(t, "x", a("b")) == t

    def test_under_recursion(self):
        """Test substitution goes under rec binders"""
        t = Rec("X", Output(Var("x"), (), RecVar("X")))
        assert substitute(t, "x", a("c")) == Rec("X", Output(a("c"), (), RecVar("X")))

    def test_restriction_renamed_on_capture(self):
        """Test a restriction is renamed when the incoming name would be captured"""
        t = New(Name("r"), ZERO_TYPE, Output(Var("x"), (NameVal(Name("r")),), STOP))
        result = substitute(t, "x", a("r"))
        assert result.name != Name("r")
        assert result.body.chan == a("r")
        assert result.body.args == (NameVal(result.name),)

    def test_free_names_bounded(self):
        """Test substitution only adds the substituted name"""
        t = Input(a("a"), ("y",), Output(Var("x"), (Var("y"),), STOP))
        before = free_names(Owned(Owner("o"), t))
        after = free_names(Owned(Owner("o"), substitute(t, "x", a("b"))))
        assert after <= before | {Name("b")}

    def test_system_template(self):
        """Test system templates instantiate under restrictions"""
        m = SysNew(Name("r"), ZERO_TYPE, Owned(Owner("o"), Output(Var("z"), (a("r"),), STOP)))
        result = substitute_system(m, {"z": a("k")})
        assert free_names(result) == {Name("k")}


class TestStructuralCongruence:
    """Test canonical forms and struct_eq"""

    def setup_method(self):
        """Setup two small systems"""
        self.m = Owned(Owner("o"), out("a"))
        self.n = Owned(Owner("p"), out("b"))

    def test_reflexive(self):
        """Test a system is congruent to itself"""
        assert struct_eq(self.m, self.m)

    def test_nil_unit(self):
        """Test nil is a unit for parallel composition"""
        assert struct_eq(SysPar(self.m, NIL), self.m)

    def test_stop_is_nil(self):
        """Test owned stop is congruent to nil"""
        assert struct_eq(Owned(Owner("o"), STOP), NIL)

    def test_commutativity(self):
        """Test parallel composition commutes"""
        assert struct_canonical(SysPar(self.m, self.n)) == struct_canonical(SysPar(self.n, self.m))

    def test_scope_extrusion(self):
        """Test restrictions hoist past parallels that do not use them"""
        inner = SysNew(Name("r"), ZERO_TYPE, Owned(Owner("o"), out("r")))
        outer = SysNew(Name("r"), ZERO_TYPE, SysPar(self.n, Owned(Owner("o"), out("r"))))
        assert struct_eq(SysPar(self.n, inner), outer)

    def test_different_systems(self):
        """Test distinct systems are told apart"""
        assert not struct_eq(self.m, self.n)

    def test_idempotent(self):
        """Test canonicalization is idempotent on random parallel systems"""
        rng = random.Random(7)
        pool = [self.m, self.n, Owned(Owner("o"), out("b")), NIL,
                SysNew(Name("r"), ResType(1, 0), Owned(Owner("o"), out("r", out("a"))))]
        for _ in range(50):
            m = par_systems(rng.choice(pool) for _ in range(rng.randint(1, 4)))
            once = struct_canonical(m)
            assert struct_canonical(once) == once

    def test_congruent_systems_share_free_names(self):
        """Test congruent systems have the same free names"""
        left = SysPar(self.m, SysPar(self.n, NIL))
        right = SysPar(SysPar(NIL, self.n), self.m)
        assert struct_eq(left, right)
        assert free_names(left) == free_names(right)

    def test_alpha_variants(self):
        """Test systems differing only in a bound name are congruent"""
        left = parse_system("new r:(0,0) in [o] a!(r)")
        right = parse_system("new s:(0,0) in [o] a!(s)")
        assert struct_eq(left, right)
        assert not struct_eq(left, parse_system("new s:(1,0) in [o] a!(s)"))

    def test_kept_bases(self):
        """Test binders with a kept base are compared by name"""
        left = parse_system("new adv:(2,0) in [o] adv!")
        right = parse_system("new ads:(2,0) in [o] ads!")
        assert canonical_key(left) == canonical_key(right)
        assert canonical_key(left, frozenset({"adv"})) != canonical_key(right, frozenset({"adv"}))

    def test_alpha_renaming_invariance(self):
        """Test canonical keys ignore random renamings of every restriction binder"""
        rng = random.Random(11)
        for _ in range(60):
            m = random_restricted_system(rng)
            renamed = rename_binders(m, rng)
            assert struct_eq(m, renamed)
            assert canonical_key(m) == canonical_key(renamed)
            assert canonical_key(struct_canonical(m)) == canonical_key(m)


def random_restricted_system(rng: random.Random):
    """Parallel outputs and inputs over a few restricted names and the free names a, b"""
    binders = [(Name(base), ResType(rng.randint(0, 2), 0)) for base in rng.sample(["r", "s", "t"], rng.randint(1, 3))]
    names = [n for n, _ in binders] + [Name("a"), Name("b")]
    components = []
    for _ in range(rng.randint(1, 3)):
        chan, arg = rng.choice(names), rng.choice(names)
        if rng.random() < 0.5:
            thread = Output(NameVal(chan), (NameVal(arg),), STOP)
        else:
            thread = Input(NameVal(chan), ("x",), Output(Var("x"), (NameVal(arg),), STOP))
        components.append(Owned(Owner(rng.choice(["o", "p"])), thread))
    m = par_systems(components)
    for name, rtype in reversed(binders):
        m = SysNew(name, rtype, m)
    return m


def rename_binders(m, rng: random.Random):
    """Rename every system-level binder to a random unused name"""
    if isinstance(m, SysNew):
        body = rename_binders(m.body, rng)
        target = fresh_name(rng.choice(["u", "v", "w", "r"]), system_names(body) | {m.name})
        return SysNew(target, m.rtype, rename_system(body, {m.name: target}))
    if isinstance(m, SysPar):
        return SysPar(rename_binders(m.left, rng), rename_binders(m.right, rng))
    return m


class TestBetaNormalForm:
    """Test split, export, match and mismatch"""

    def test_split(self):
        """Test owned parallel threads split into owned components"""
        m = Owned(Owner("o"), Par(out("a"), out("b")))
        assert struct_eq(beta_normalize(m), SysPar(Owned(Owner("o"), out("a")), Owned(Owner("o"), out("b"))))

    def test_export(self):
        """Test thread restrictions move to the system level"""
        m = Owned(Owner("o"), New(Name("r"), ZERO_TYPE, out("r")))
        assert struct_eq(beta_normalize(m), SysNew(Name("r"), ZERO_TYPE, Owned(Owner("o"), out("r"))))

    def test_match(self):
        """Test a closed match takes the then branch"""
        m = Owned(Owner("o"), Match(a("a"), a("a"), out("x"), out("y")))
        assert struct_eq(beta_normalize(m), Owned(Owner("o"), out("x")))

    def test_mismatch(self):
        """Test a closed mismatch takes the else branch"""
        m = Owned(Owner("o"), Match(a("a"), a("b"), out("x"), out("y")))
        assert struct_eq(beta_normalize(m), Owned(Owner("o"), out("y")))

    def test_recursion_left_folded(self):
        """Test recursion is not unwound by beta normalization"""
        m = Owned(Owner("o"), Rec("X", out("up", out("down", RecVar("X")))))
        assert beta_normalize(m) == struct_canonical(m)

    def test_unwind_normalize(self):
        """Test template matching unfolds top-level recursion once"""
        m = Owned(Owner("o"), Rec("X", out("up", out("down", RecVar("X")))))
        unwound = unwind_normalize(m)
        assert isinstance(unwound, Owned)
        assert isinstance(unwound.thread, Output)
        assert unwound.thread.chan == a("up")

    def test_garbage_collection(self):
        """Test code blocked on a private channel used one way is dropped"""
        m = SysNew(Name("r"), ZERO_TYPE, SysPar(Owned(Owner("o"), Input(a("r"), (), out("x"))),
                                               Owned(Owner("o"), out("y"))))
        assert canonical_key(collect_garbage(m)) == canonical_key(Owned(Owner("o"), out("y")))


class TestChoice:
    """Test the internal choice shorthand"""

    def test_literal_expansion(self):
        """Test stop (+) stop expands to a fresh three-way parallel"""
        t = desugar_choice(STOP, STOP)
        assert isinstance(t, New)
        assert t.rtype == ZERO_TYPE
        c = NameVal(t.name)
        assert t.body == Par(Output(c, (), STOP), Par(Input(c, (), STOP), Input(c, (), STOP)))

    def test_nested_choices_use_distinct_channels(self):
        """Test nested choices get distinct fresh channels"""
        inner = desugar_choice(out("p"), out("q"))
        outer = desugar_choice(inner, out("r"))
        assert outer.name != inner.name

    def test_parsed_choice(self):
        """Test the parser desugars (+) the same way"""
        m = parse_system("[o] a! (+) b!")
        expected = Owned(Owner("o"), desugar_choice(out("a"), out("b")))
        assert struct_eq(m, expected)
