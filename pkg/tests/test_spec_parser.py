"""
Tests for spec_parser.py module
"""

import pytest

from boltzmann_py.errors import IllFoundedError, SpecSyntaxError, UnknownNameError
from boltzmann_py.spec_parser import (
    Atom,
    Cyc,
    Epsilon,
    Product,
    Ref,
    Seq,
    Set,
    Union,
    format_expr,
    format_spec,
    load_spec,
    parse_spec,
    tokenize,
    validate,
)


class TestTokenize:
    """Tests for the tokenizer"""

    def test_skips_comments_and_spaces(self):
        """Test that comments and blanks produce no tokens"""
        tokens = list(tokenize("# comment\nA = Z  # trailing\n"))
        assert [t.kind for t in tokens] == ["name", "op", "name", "eof"]

    def test_tagged_atom(self):
        """Test that Z<c> is a single token carrying the letter"""
        tokens = list(tokenize("Z<a>"))
        assert tokens[0].kind == "tagged"
        assert tokens[0].text == "a"

    def test_positions(self):
        """Test line and column tracking"""
        tokens = list(tokenize("A = Z\nB = Z"))
        b = tokens[3]
        assert (b.text, b.line, b.column) == ("B", 2, 1)

    def test_bad_character(self):
        """Test that an unknown character is a syntax error with a position"""
        with pytest.raises(SpecSyntaxError) as exc_info:
            list(tokenize("A = Z $"))
        assert exc_info.value.line == 1
        assert exc_info.value.column == 7


class TestParseSpec:
    """Tests for parse_spec"""

    def test_set_of_atoms(self):
        """Test the one-class system A = SET(Z)"""
        system = parse_spec("A = SET(Z)")
        assert system.root == "A"
        assert system.definitions["A"] == Set(Atom(), 0)

    def test_recursive_system(self):
        """Test Cayley trees T = Z * SET(T)"""
        system = parse_spec("T = Z * SET(T)")
        assert system.definitions["T"] == Product(Atom(), Set(Ref("T"), 0))

    def test_unknown_name(self):
        """Test that a dangling reference is reported with its name"""
        with pytest.raises(UnknownNameError) as exc_info:
            parse_spec("A = SET(B)")
        assert exc_info.value.name == "B"
        assert exc_info.value.line == 1

    def test_precedence(self):
        """Test that * binds tighter than +"""
        system = parse_spec("A = 1 + Z * A")
        assert system.definitions["A"] == Union(Epsilon(), Product(Atom(), Ref("A")))

    def test_cardinality_bounds(self):
        """Test the >=k variants and the CYC default"""
        system = parse_spec("A = SET>=2(Z) + SEQ>=1(Z) + CYC(Z) + CYC>=3(Z)")
        expr = system.definitions["A"]
        assert expr.left.left.left == Set(Atom(), 2)
        assert expr.left.left.right == Seq(Atom(), 1)
        assert expr.left.right == Cyc(Atom(), 1)
        assert expr.right == Cyc(Atom(), 3)

    def test_root_is_first_class(self):
        """Test that the first definition is the root"""
        system = parse_spec("P = SET(B)\nB = SET>=1(Z)")
        assert system.root == "P"
        assert system.classes == ["P", "B"]

    @pytest.mark.parametrize("text", ["A = ", "A = SET(Z", "= Z", "A = 2", "A = Z +", "Z = Z", "SET = Z"])
    def test_malformed(self, text):
        """Test malformed sources"""
        with pytest.raises(SpecSyntaxError):
            parse_spec(text)

    def test_duplicate_definition(self):
        """Test that a class cannot be defined twice"""
        with pytest.raises(SpecSyntaxError, match="defined twice"):
            parse_spec("A = Z\nA = 1")

    def test_empty_source(self):
        """Test that a source with only comments is rejected"""
        with pytest.raises(SpecSyntaxError, match="empty"):
            parse_spec("# nothing here\n")

    def test_cyc_zero_bound(self):
        """Test that CYC>=0 is rejected"""
        with pytest.raises(SpecSyntaxError):
            parse_spec("A = CYC>=0(Z)")


class TestFormat:
    """Tests for the pretty-printer"""

    @pytest.mark.parametrize("text", [
        "A = SET(Z)",
        "T = Z * SET(T)",
        "A = 1 + Z * A",
        "A = (Z + Z) * Z",
        "A = Z * (Z * Z)",
        "A = Z + (Z + Z)",
        "P = SET(B)\nB = SET>=1(Z)",
        "W = SEQ(Z<a> + Z<b>)",
        "D = SET(CYC>=2(Z))",
    ])
    def test_parse_print_parse(self, text):
        """Test that printing then parsing gives back the same tree"""
        system = parse_spec(text)
        again = parse_spec(format_spec(system))
        assert again.definitions == system.definitions
        assert again.root == system.root

    def test_format_expr(self):
        """Test the rendering of bounds and tags"""
        assert format_expr(Set(Atom("a"), 2)) == "SET>=2(Z<a>)"
        assert format_expr(Cyc(Atom(), 1)) == "CYC(Z)"


class TestValidate:
    """Tests for well-foundedness validation"""

    def test_valid(self, set_spec):
        """Test that SET(Z) validates"""
        assert set_spec.root == "A"
        assert not set_spec.recursive

    def test_seq_over_epsilon(self):
        """Test SEQ over a class with a size-0 object"""
        with pytest.raises(IllFoundedError) as exc_info:
            load_spec("A = SEQ(1 + Z)")
        assert exc_info.value.class_name == "A"
        assert "SEQ" in exc_info.value.reason

    def test_unproductive(self):
        """Test a recursion with no base case"""
        with pytest.raises(IllFoundedError, match="unproductive"):
            load_spec("A = A * Z")

    def test_size_zero_cycle(self):
        """Test recursion through a size-preserving path"""
        with pytest.raises(IllFoundedError):
            load_spec("A = 1 + A")

    def test_collection_over_empty_reference(self):
        """Test SET over a class admitting the empty object"""
        with pytest.raises(IllFoundedError):
            load_spec("A = SET(B)\nB = 1 + Z")

    def test_recursive_flags(self, cayley_spec):
        """Test recursion detection"""
        assert cayley_spec.recursive == frozenset({"T"})
        assert not cayley_spec.is_finite("T")

    def test_finite_degree(self):
        """Test the largest size of a finite class"""
        spec = load_spec("A = 1 + Z * B\nB = Z + Z * Z")
        assert spec.is_finite("A")
        assert spec.degree("A") == 3
        assert spec.admits_empty["A"]
        assert not spec.admits_empty["B"]

    def test_resolve(self, bell_spec):
        """Test that None resolves to the root and unknown names raise"""
        assert bell_spec.resolve(None) == "P"
        with pytest.raises(UnknownNameError):
            bell_spec.resolve("Q")

    def test_validate_parsed_system(self):
        """Test validate on an explicitly parsed system"""
        spec = validate(parse_spec("L = SEQ(Z<a> + Z<b>)"))
        assert spec.root == "L"
