"""
Sampled objects and their serialization.

A labeled object is a shape tree over the constructors plus the labels
carried by its atoms. Shapes are kept canonical: the children of a SET are
ordered by their smallest label and a CYC is rotated to start with the
child holding the smallest label, so two draws of the same labeled object
compare equal.

Word classes sample WordObject, shuffle products ShuffleObject. Objects
drawn by an ordinary sampler carry the parameter u and x*u used for the
draw.
"""

from dataclasses import dataclass, field, replace
from typing import Any, Dict, Iterator, List, Optional, Tuple


class Shape:
    """Base class of shape nodes"""

    __slots__ = ()

    def atoms(self) -> Iterator["Leaf"]:
        return iter(())

    def min_label(self) -> int:
        return min(leaf.label for leaf in self.atoms())


@dataclass(frozen=True)
class EmptyLeaf(Shape):
    """The neutral object"""

    def to_json(self) -> Dict[str, Any]:
        return {"type": "eps"}

    def to_term(self) -> str:
        return "1"


@dataclass(frozen=True)
class Leaf(Shape):
    """Atom carrying its label"""
    label: int = 0
    letter: Optional[str] = None

    def atoms(self) -> Iterator["Leaf"]:
        yield self

    def to_json(self) -> Dict[str, Any]:
        node: Dict[str, Any] = {"type": "atom", "label": self.label}
        if self.letter is not None:
            node["letter"] = self.letter
        return node

    def to_term(self) -> str:
        return f"{self.letter or ''}{self.label}"


@dataclass(frozen=True)
class Branch(Shape):
    """Union marker: which side of a + produced the child"""
    side: str
    child: Shape

    def atoms(self) -> Iterator[Leaf]:
        return self.child.atoms()

    def to_json(self) -> Dict[str, Any]:
        return {"type": "union", "side": self.side, "child": self.child.to_json()}

    def to_term(self) -> str:
        return f"{self.side}:{self.child.to_term()}"


@dataclass(frozen=True)
class Pair(Shape):
    left: Shape
    right: Shape

    def atoms(self) -> Iterator[Leaf]:
        yield from self.left.atoms()
        yield from self.right.atoms()

    def to_json(self) -> Dict[str, Any]:
        return {"type": "product", "left": self.left.to_json(), "right": self.right.to_json()}

    def to_term(self) -> str:
        return f"({self.left.to_term()}, {self.right.to_term()})"


_BRACKETS = {"seq": "[]", "set": "{}", "cyc": "<>"}


@dataclass(frozen=True)
class Collection(Shape):
    """SEQ, SET or CYC node with its components"""
    kind: str
    children: Tuple[Shape, ...]

    def atoms(self) -> Iterator[Leaf]:
        for child in self.children:
            yield from child.atoms()

    def to_json(self) -> Dict[str, Any]:
        return {"type": self.kind, "children": [c.to_json() for c in self.children]}

    def to_term(self) -> str:
        opening, closing = _BRACKETS[self.kind]
        return opening + ", ".join(c.to_term() for c in self.children) + closing


def relabel(shape: Shape, labels: Iterator[int]) -> Shape:
    """Assign labels to the atoms in depth-first order"""
    if isinstance(shape, Leaf):
        return Leaf(next(labels), shape.letter)
    if isinstance(shape, Branch):
        return Branch(shape.side, relabel(shape.child, labels))
    if isinstance(shape, Pair):
        left = relabel(shape.left, labels)
        return Pair(left, relabel(shape.right, labels))
    if isinstance(shape, Collection):
        return Collection(shape.kind, tuple(relabel(c, labels) for c in shape.children))
    return shape


def canonicalize(shape: Shape) -> Shape:
    """Order SET children by smallest label, rotate CYC to its smallest label"""
    if isinstance(shape, Branch):
        return Branch(shape.side, canonicalize(shape.child))
    if isinstance(shape, Pair):
        return Pair(canonicalize(shape.left), canonicalize(shape.right))
    if isinstance(shape, Collection):
        children = tuple(canonicalize(c) for c in shape.children)
        if shape.kind == "set":
            children = tuple(sorted(children, key=Shape.min_label))
        elif shape.kind == "cyc" and children:
            first = min(range(len(children)), key=lambda i: children[i].min_label())
            children = children[first:] + children[:first]
        return Collection(shape.kind, children)
    return shape


@dataclass(frozen=True)
class DrawInfo:
    """Parameter actually used by an ordinary draw"""
    u: float
    x_effective: float


class SampledObject:
    """Common serialization of sampled objects"""

    __slots__ = ()

    draw: Optional[DrawInfo]

    @property
    def mode(self) -> str:
        return "exponential" if self.draw is None else "ordinary"

    def with_draw(self, u: float, x_effective: float):
        return replace(self, draw=DrawInfo(u, x_effective))

    def _metadata(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"size": self.size, "mode": self.mode}
        if self.draw is not None:
            data["u"] = self.draw.u
            data["x_effective"] = self.draw.x_effective
        return data


@dataclass(frozen=True)
class LabeledObject(SampledObject):
    shape: Shape
    size: int
    draw: Optional[DrawInfo] = field(default=None, compare=False)

    @property
    def labels(self) -> List[int]:
        """Atom labels in depth-first order"""
        return [leaf.label for leaf in self.shape.atoms()]

    def to_json(self) -> Dict[str, Any]:
        data = self._metadata()
        data["shape"] = self.shape.to_json()
        data["labels"] = self.labels
        return data

    def to_term(self) -> str:
        return self.shape.to_term()


@dataclass(frozen=True)
class WordObject(SampledObject):
    word: Tuple[str, ...]
    draw: Optional[DrawInfo] = field(default=None, compare=False)

    @property
    def size(self) -> int:
        return len(self.word)

    def to_json(self) -> Dict[str, Any]:
        data = self._metadata()
        data["word"] = list(self.word)
        return data

    def to_term(self) -> str:
        return "".join(self.word) or "ε"


@dataclass(frozen=True)
class ShuffleObject(SampledObject):
    """
    Interleaving-annotated pair: the positions taken from the left word,
    in increasing order, determine the merge.
    """
    left: Tuple[str, ...]
    right: Tuple[str, ...]
    pattern: Tuple[int, ...]
    draw: Optional[DrawInfo] = field(default=None, compare=False)

    @property
    def size(self) -> int:
        return len(self.left) + len(self.right)

    @property
    def merged(self) -> Tuple[str, ...]:
        taken = set(self.pattern)
        left, right = iter(self.left), iter(self.right)
        return tuple(next(left) if i in taken else next(right) for i in range(self.size))

    def to_json(self) -> Dict[str, Any]:
        data = self._metadata()
        data["left"] = list(self.left)
        data["right"] = list(self.right)
        data["pattern"] = list(self.pattern)
        data["word"] = list(self.merged)
        return data

    def to_term(self) -> str:
        merged = "".join(self.merged) or "ε"
        marks = "".join("L" if i in set(self.pattern) else "R" for i in range(self.size))
        return f"{merged} [{marks}]" if marks else merged
