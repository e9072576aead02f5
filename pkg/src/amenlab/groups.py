"""Discrete groups, their actions on finite sets, and the cylinder model of
the free-group boundary.

Letters are encoded as nonzero integers: ``+i`` is the i-th generator
(1-based) and ``-i`` its formal inverse.  Elements of free groups are reduced
letter tuples, elements of free-abelian groups are exponent tuples and
elements of finite groups are row indices of the Cayley table.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

FREE = "free"
FINITE = "finite"
ABELIAN = "free-abelian"


class GroupError(ValueError):
    """Malformed group data or an unknown generator symbol."""


class DepthError(ValueError):
    """A cylinder function does not carry enough depth for the request."""


def _default_names(k):
    letters = "abcdefghijklmnopqrstuvwxyz"
    if k <= len(letters):
        return tuple(letters[:k])
    return tuple(f"s{i}" for i in range(1, k + 1))


class GroupDescriptor:
    """A finitely generated group with canonical normal forms.

    Use the constructors :meth:`free`, :meth:`free_abelian` and :meth:`finite`.
    """

    def __init__(self, kind, rank, names, table=None, gen_elements=None):
        self.kind = kind
        self.rank = int(rank)
        self.names = tuple(names)
        if len(self.names) != self.rank:
            raise GroupError("one name per generator is required")
        if len(set(self.names)) != self.rank:
            raise GroupError("generator names must be distinct")
        self.table = table
        self.gen_elements = gen_elements
        if kind == FINITE:
            self._init_finite()
        self._key = (kind, self.rank, self.names,
                     None if table is None else table.tobytes(),
                     None if gen_elements is None else tuple(gen_elements))
        self._hash = hash(self._key)

    # -- constructors -------------------------------------------------

    @classmethod
    def free(cls, rank, names=None):
        if rank < 1:
            raise GroupError("free group rank must be >= 1")
        return cls(FREE, rank, names or _default_names(rank))

    @classmethod
    def free_abelian(cls, rank, names=None):
        if rank < 1:
            raise GroupError("free-abelian rank must be >= 1")
        return cls(ABELIAN, rank, names or _default_names(rank))

    @classmethod
    def finite(cls, table, generators, names=None):
        """Finite group from a Cayley table ``table[a, b] = a*b``.

        ``generators`` lists element indices; they must generate the group.
        """
        table = np.asarray(table, dtype=np.int64)
        gens = tuple(int(g) for g in generators)
        if not gens:
            raise GroupError("a finite group needs at least one generator")
        return cls(FINITE, len(gens), names or _default_names(len(gens)),
                   table=table, gen_elements=gens)

    @classmethod
    def cyclic(cls, n, name="a"):
        idx = np.arange(n)
        return cls.finite((idx[:, None] + idx[None, :]) % n, [1 % n], [name])

    @classmethod
    def symmetric(cls, n):
        perms = list(itertools.permutations(range(n)))
        index = {p: i for i, p in enumerate(perms)}
        table = np.empty((len(perms), len(perms)), dtype=np.int64)
        for i, p in enumerate(perms):
            for j, q in enumerate(perms):
                table[i, j] = index[tuple(p[q[t]] for t in range(n))]
        gens = [index[tuple([1, 0] + list(range(2, n)))]]
        if n > 2:
            gens.append(index[tuple(list(range(1, n)) + [0])])
        return cls.finite(table, gens)

    # -- validation ---------------------------------------------------

    def _init_finite(self):
        t = self.table
        if t.ndim != 2 or t.shape[0] != t.shape[1] or t.shape[0] == 0:
            raise GroupError("Cayley table must be a nonempty square array")
        n = t.shape[0]
        if t.min() < 0 or t.max() >= n:
            raise GroupError("Cayley table entries out of range")
        ar = np.arange(n)
        ident = [e for e in range(n) if np.array_equal(t[e], ar) and np.array_equal(t[:, e], ar)]
        if len(ident) != 1:
            raise GroupError("Cayley table has no two-sided identity")
        self._e = ident[0]
        srt = np.sort(t, axis=1)
        if not (np.all(srt == ar) and np.all(np.sort(t, axis=0) == ar[:, None])):
            raise GroupError("Cayley table is not a Latin square")
        if n <= 64:
            left = t[t[:, :, None], ar[None, None, :]]   # (a*b)*c
            right = t[ar[:, None, None], t[None, :, :]]  # a*(b*c)
            if not np.array_equal(left, right):
                raise GroupError("Cayley table is not associative")
        else:
            rng = np.random.default_rng(0)
            a, b, c = rng.integers(0, n, size=(3, 20000))
            if not np.array_equal(t[t[a, b], c], t[a, t[b, c]]):
                raise GroupError("Cayley table is not associative")
        inv = np.argmax(t == self._e, axis=1)
        if not np.all(t[ar, inv] == self._e):
            raise GroupError("Cayley table lacks inverses")
        self._inv = inv
        for g in self.gen_elements:
            if not 0 <= g < n:
                raise GroupError(f"generator index {g} out of range")
        # BFS tree gives canonical shortest words and word lengths.
        words = {self._e: ()}
        queue = deque([self._e])
        letters = self.letters
        while queue:
            g = queue.popleft()
            for s in letters:
                h = int(t[g, self._letter_elem(s)])
                if h not in words:
                    words[h] = words[g] + (s,)
                    queue.append(h)
        if len(words) != n:
            raise GroupError("generators do not generate the group")
        self._words = words

    def _letter_elem(self, s):
        g = self.gen_elements[abs(s) - 1]
        return g if s > 0 else int(self._inv[g])

    # -- basic structure ----------------------------------------------

    def __eq__(self, other):
        return isinstance(other, GroupDescriptor) and self._key == other._key

    def __hash__(self):
        return self._hash

    def __repr__(self):
        if self.kind == FINITE:
            return f"GroupDescriptor(finite, order={self.order})"
        return f"GroupDescriptor({self.kind}, rank={self.rank})"

    @property
    def order(self):
        """Group order, or None for infinite groups."""
        return self.table.shape[0] if self.kind == FINITE else None

    @cached_property
    def letters(self):
        """Generators and inverses in the order a, A, b, B, ..."""
        return tuple(x for i in range(1, self.rank + 1) for x in (i, -i))

    @cached_property
    def identity(self):
        if self.kind == FREE:
            return GroupElement(self, ())
        if self.kind == ABELIAN:
            return GroupElement(self, (0,) * self.rank)
        return GroupElement(self, self._e)

    @cached_property
    def generators(self):
        return tuple(self.letter(i) for i in range(1, self.rank + 1))

    @cached_property
    def symmetric_generators(self):
        return tuple(self.letter(s) for s in self.letters)

    def letter(self, s):
        if not (isinstance(s, (int, np.integer)) and 1 <= abs(s) <= self.rank):
            raise GroupError(f"unknown letter {s!r}")
        s = int(s)
        if self.kind == FREE:
            return GroupElement(self, (s,))
        if self.kind == ABELIAN:
            v = [0] * self.rank
            v[abs(s) - 1] = 1 if s > 0 else -1
            return GroupElement(self, tuple(v))
        return GroupElement(self, self._letter_elem(s))

    def letter_name(self, s):
        name = self.names[abs(s) - 1]
        if s > 0:
            return name
        if len(name) == 1 and name.islower():
            return name.upper()
        return name + "^-1"

    def parse_letter(self, sym):
        """Map a symbol (``'a'``, ``'A'``, ``'a^-1'``, ``'a⁻¹'`` or an int) to a letter."""
        if isinstance(sym, (int, np.integer)) and not isinstance(sym, bool):
            if 1 <= abs(int(sym)) <= self.rank:
                return int(sym)
            raise GroupError(f"unknown generator symbol {sym!r}")
        if not isinstance(sym, str):
            raise GroupError(f"unknown generator symbol {sym!r}")
        s = sym.strip()
        for suffix in ("^-1", "⁻¹", "'"):
            if s.endswith(suffix):
                base = s[: -len(suffix)]
                if base in self.names:
                    return -(self.names.index(base) + 1)
        if s in self.names:
            return self.names.index(s) + 1
        if len(s) == 1 and s.lower() in self.names and s.isupper():
            return -(self.names.index(s.lower()) + 1)
        raise GroupError(f"unknown generator symbol {sym!r}")

    def parse_word(self, word):
        """Letters from a space separated string or a sequence of symbols."""
        if isinstance(word, str):
            w = word.strip()
            if w in ("", "e", "1"):
                return ()
            tokens = w.split() if " " in w else self._split_compact(w)
        else:
            tokens = list(word)
        return tuple(self.parse_letter(t) for t in tokens)

    def _split_compact(self, w):
        # 'abA' style strings when every name is a single character
        if all(len(n) == 1 for n in self.names):
            out, i = [], 0
            while i < len(w):
                for suffix in ("^-1", "⁻¹"):
                    if w.startswith(suffix, i + 1):
                        out.append(w[i] + suffix)
                        i += 1 + len(suffix)
                        break
                else:
                    out.append(w[i])
                    i += 1
            return out
        return [w]

    def element(self, word=()):
        """Normal form of a word (string or letter/symbol sequence)."""
        return normal_form(word, self)

    # -- arithmetic on raw data ---------------------------------------

    def _mul(self, a, b):
        if self.kind == FREE:
            return _reduce_concat(a, b)
        if self.kind == ABELIAN:
            return tuple(x + y for x, y in zip(a, b))
        return int(self.table[a, b])

    def _inv_data(self, a):
        if self.kind == FREE:
            return tuple(-s for s in reversed(a))
        if self.kind == ABELIAN:
            return tuple(-x for x in a)
        return int(self._inv[a])

    def word_of(self, g):
        """Canonical letter word representing ``g``."""
        d = g.data
        if self.kind == FREE:
            return d
        if self.kind == ABELIAN:
            out = []
            for i, x in enumerate(d):
                out.extend([(i + 1) if x > 0 else -(i + 1)] * abs(x))
            return tuple(out)
        return self._words[d]

    def length(self, g):
        d = g.data
        if self.kind == FREE:
            return len(d)
        if self.kind == ABELIAN:
            return sum(abs(x) for x in d)
        return len(self._words[d])

    def format(self, g):
        w = self.word_of(g)
        if not w:
            return "e"
        return " ".join(self.letter_name(s) for s in w)

    def elements(self):
        """All elements of a finite group in index order."""
        if self.kind != FINITE:
            raise GroupError("only finite groups can be enumerated")
        return tuple(GroupElement(self, i) for i in range(self.order))

    # -- serialization ------------------------------------------------

    def to_doc(self):
        doc = {"kind": self.kind, "names": list(self.names)}
        if self.kind == FINITE:
            doc["table"] = self.table.tolist()
            doc["generators"] = list(self.gen_elements)
        else:
            doc["rank"] = self.rank
        return doc

    @classmethod
    def from_doc(cls, doc):
        kind = doc.get("kind")
        names = doc.get("names")
        if kind == FREE:
            return cls.free(int(doc["rank"]), names)
        if kind == ABELIAN:
            return cls.free_abelian(int(doc["rank"]), names)
        if kind == FINITE:
            if "table" in doc:
                return cls.finite(doc["table"], doc["generators"], names)
            if "cyclic" in doc:
                return cls.cyclic(int(doc["cyclic"]))
            if "symmetric" in doc:
                return cls.symmetric(int(doc["symmetric"]))
        if kind == "cyclic":
            return cls.cyclic(int(doc["order"]))
        if kind == "symmetric":
            return cls.symmetric(int(doc["degree"]))
        raise GroupError(f"unrecognised group document: {doc!r}")


def _reduce_concat(a, b):
    i = 0
    n = min(len(a), len(b))
    while i < n and a[len(a) - 1 - i] == -b[i]:
        i += 1
    return a[: len(a) - i] + b[i:]


@dataclass(frozen=True, eq=True)
class GroupElement:
    group: GroupDescriptor = field(repr=False)
    data: object

    def __mul__(self, other):
        if not isinstance(other, GroupElement):
            return NotImplemented
        if other.group != self.group:
            raise GroupError("elements of different groups")
        return GroupElement(self.group, self.group._mul(self.data, other.data))

    def inverse(self):
        return GroupElement(self.group, self.group._inv_data(self.data))

    @property
    def length(self):
        return self.group.length(self)

    @property
    def word(self):
        return self.group.word_of(self)

    def is_identity(self):
        return self == self.group.identity

    def __repr__(self):
        return f"<{self.group.format(self)}>"

    def __str__(self):
        return self.group.format(self)

    def sort_key(self):
        """Shortlex key on canonical words, used for deterministic ordering."""
        w = self.word
        order = {s: i for i, s in enumerate(self.group.letters)}
        return (len(w), tuple(order[s] for s in w))


def normal_form(word, G):
    """Canonical element for a word over the generators of ``G``."""
    letters = G.parse_word(word)
    if G.kind == FREE:
        stack = []
        for s in letters:
            if stack and stack[-1] == -s:
                stack.pop()
            else:
                stack.append(s)
        return GroupElement(G, tuple(stack))
    if G.kind == ABELIAN:
        v = [0] * G.rank
        for s in letters:
            v[abs(s) - 1] += 1 if s > 0 else -1
        return GroupElement(G, tuple(v))
    g = G._e
    for s in letters:
        g = int(G.table[g, G._letter_elem(s)])
    return GroupElement(G, g)


def ball(G, r):
    """Elements of word length at most ``r`` in shortlex order."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    e = G.identity
    seen = {e}
    layer = [e]
    out = [e]
    gens = G.symmetric_generators
    for _ in range(r):
        nxt = []
        for g in layer:
            for s in gens:
                h = g * s
                if h not in seen:
                    seen.add(h)
                    nxt.append(h)
        nxt.sort(key=GroupElement.sort_key)
        out.extend(nxt)
        layer = nxt
    return tuple(out)


def free_ball_size(k, r):
    """Closed-form size of the radius-r ball in the free group of rank k."""
    if r == 0:
        return 1
    if k == 1:
        return 2 * r + 1
    q = 2 * k - 1
    return 1 + 2 * k * (q ** r - 1) // (q - 1)


def box(G, n):
    """The box ``[0, n)^d`` in a free-abelian group (or a cyclic free group)."""
    if G.kind == ABELIAN:
        return tuple(GroupElement(G, v) for v in itertools.product(range(n), repeat=G.rank))
    if G.kind == FREE and G.rank == 1:
        return tuple(GroupElement(G, (1,) * j) for j in range(n))
    raise GroupError("boxes are defined for free-abelian groups only")


# ---------------------------------------------------------------------------
# spaces


class FinitePoints:
    """A finite set with a left action given by one permutation per generator.

    ``perms[i][x]`` is the image of point ``x`` under generator ``i+1``.
    """

    is_cylinder = False

    def __init__(self, group, labels, perms):
        self.group = group
        self.labels = tuple(labels)
        n = len(self.labels)
        if n == 0:
            raise GroupError("space must have at least one point")
        if len(perms) != group.rank:
            raise GroupError("one permutation per generator is required")
        self._gen = []
        for p in perms:
            p = np.asarray(p, dtype=np.int64)
            if p.shape != (n,) or not np.array_equal(np.sort(p), np.arange(n)):
                raise GroupError("generator action is not a permutation")
            self._gen.append(p)
        self._ginv = [np.argsort(p) for p in self._gen]
        self._cache = {}
        self._check_action()
        self._index = {lab: i for i, lab in enumerate(self.labels)}
        self._key = (group, self.labels, tuple(p.tobytes() for p in self._gen))

    @classmethod
    def point(cls, group):
        return cls(group, ["*"], [[0]] * group.rank)

    @classmethod
    def regular(cls, group):
        """A finite group acting on itself by left translation."""
        if group.kind != FINITE:
            raise GroupError("regular action needs a finite group")
        n = group.order
        perms = [group.table[g, np.arange(n)] for g in group.gen_elements]
        return cls(group, list(range(n)), perms)

    def _check_action(self):
        G = self.group
        if G.kind == FINITE:
            # The permutation of every element is built along its canonical
            # word, so checking s * g for every generator s and every g covers
            # all relations.
            for g in G.elements():
                pg = self.perm(g)
                for s in G.symmetric_generators:
                    if not np.array_equal(self.perm(s * g), self._letter_perm(s.word[0])[pg]):
                        raise GroupError("permutations do not define an action of the group")
        elif G.kind == ABELIAN:
            for a, b in itertools.combinations(self._gen, 2):
                if not np.array_equal(a[b], b[a]):
                    raise GroupError("generator permutations of an abelian group must commute")

    def __eq__(self, other):
        return isinstance(other, FinitePoints) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return f"FinitePoints({len(self.labels)} points)"

    def size(self, depth=0):
        return len(self.labels)

    def check_depth(self, depth):
        if depth != 0:
            raise DepthError("finite spaces only carry depth 0")

    def _letter_perm(self, s):
        return self._gen[s - 1] if s > 0 else self._ginv[-s - 1]

    def perm(self, g):
        """Index array ``P`` with ``P[x] = g.x``."""
        p = self._cache.get(g)
        if p is None:
            p = np.arange(len(self.labels))
            for s in reversed(g.word):  # g.x = s1.(s2.(... x))
                p = self._letter_perm(s)[p]
            self._cache[g] = p
        return p

    def index_of(self, x):
        """Index of a point given by label, or by index when labels differ."""
        if x in self._index:
            return self._index[x]
        if isinstance(x, (int, np.integer)) and not isinstance(x, bool) and 0 <= x < len(self.labels):
            return int(x)
        raise KeyError(f"unknown point {x!r}")

    def act(self, g, x):
        return self.labels[self.perm(g)[self.index_of(x)]]

    def translation_index(self, h, d_in=0, d_out=0):
        """Index array ``I`` with ``p^h[x] = p[I[x]]``, i.e. ``I[x] = h^-1.x``."""
        return self.perm(h.inverse())

    def refine_index(self, d_from, d_to):
        return np.arange(len(self.labels))

    def to_doc(self):
        return {"type": "finite", "labels": list(self.labels),
                "action": {self.group.names[i]: self._gen[i].tolist() for i in range(self.group.rank)}}


class BoundaryCylinders:
    """Cylinder model of the Gromov boundary of a free group.

    Depth-d cylinders are the reduced words of length d, indexed in
    lexicographic order over the letter order a, A, b, B, ...  A function at
    depth d is constant on each depth-d cylinder.
    """

    is_cylinder = True

    def __init__(self, group):
        if group.kind != FREE:
            raise GroupError("boundary cylinders need a free group")
        self.group = group
        k = group.rank
        self.k = k
        self.q = 2 * k - 1
        self.letter_order = np.array(group.letters, dtype=np.int64)
        pos = {s: i for i, s in enumerate(group.letters)}
        self._pos = pos
        # next_letters[i] lists letters allowed after letter position i
        nxt = np.array([[t for t in group.letters if t != -s] for s in group.letters], dtype=np.int64)
        self.next_letters = nxt
        rank = np.full((2 * k, 2 * k), -1, dtype=np.int64)
        for i in range(2 * k):
            for j, t in enumerate(nxt[i]):
                rank[i, pos[int(t)]] = j
        self._rank = rank
        self._words = {}
        self._act_cache = {}

    def __eq__(self, other):
        return isinstance(other, BoundaryCylinders) and self.group == other.group

    def __hash__(self):
        return hash(("cyl", self.group))

    def __repr__(self):
        return f"BoundaryCylinders(rank={self.k})"

    def size(self, depth):
        if depth < 0:
            raise DepthError("negative depth")
        return 1 if depth == 0 else 2 * self.k * self.q ** (depth - 1)

    def check_depth(self, depth):
        if depth < 0:
            raise DepthError("negative depth")

    def words(self, depth):
        """Array of shape (size, depth) of all reduced words, in index order."""
        w = self._words.get(depth)
        if w is None:
            if depth == 0:
                w = np.zeros((1, 0), dtype=np.int64)
            else:
                w = self.letter_order[:, None].copy()
                for _ in range(depth - 1):
                    last = self._positions(w[:, -1])
                    tails = self.next_letters[last]  # (N, q)
                    w = np.concatenate([np.repeat(w, self.q, axis=0), tails.reshape(-1, 1)], axis=1)
            w.setflags(write=False)
            self._words[depth] = w
        return w

    def _positions(self, letters):
        # letter s -> position in a, A, b, B order
        letters = np.asarray(letters)
        return np.where(letters > 0, 2 * (letters - 1), 2 * (-letters - 1) + 1)

    def index_words(self, w):
        """Index of each row of a (N, d) array of reduced words."""
        w = np.asarray(w, dtype=np.int64)
        if w.ndim == 1:
            w = w[None, :]
        n, d = w.shape
        if d == 0:
            return np.zeros(n, dtype=np.int64)
        pos = self._positions(w)
        idx = pos[:, 0].copy()
        for t in range(1, d):
            r = self._rank[pos[:, t - 1], pos[:, t]]
            if np.any(r < 0):
                raise GroupError("word is not reduced")
            idx = idx * self.q + r
        return idx

    def index_of(self, x):
        w = self.group.parse_word(x) if not isinstance(x, tuple) else x
        return int(self.index_words(np.array(w, dtype=np.int64).reshape(1, -1))[0])

    def cylinder(self, depth, index):
        return tuple(int(s) for s in self.words(depth)[index])

    def act(self, g, x):
        """Image cylinder of ``g`` acting on cylinder ``x``; depth drops by |g|."""
        w = tuple(self.group.parse_word(x)) if not isinstance(x, tuple) else x
        if len(w) < g.length + 1:
            raise DepthError(f"cylinder depth {len(w)} < |g| + 1 = {g.length + 1}")
        rows = self._act_rows(np.array(w, dtype=np.int64).reshape(1, -1), g)
        return tuple(int(s) for s in rows[0])

    def _act_rows(self, rows, g):
        for s in reversed(g.word):
            if rows.shape[1] == 0:
                break
            first = rows[:, :1]
            cancel = first[:, 0] == -s
            L = rows.shape[1]
            dropped = rows[:, 1:L]
            pushed = np.concatenate([np.full((rows.shape[0], 1), s, dtype=np.int64), rows[:, : L - 2]], axis=1) \
                if L >= 2 else np.zeros((rows.shape[0], 0), dtype=np.int64)
            rows = np.where(cancel[:, None], dropped, pushed)
        return rows

    def act_index(self, g, depth):
        """Index array ``J`` with ``g.x`` lying in cylinder ``J[x]`` at depth ``depth - |g|``."""
        key = (g, depth)
        J = self._act_cache.get(key)
        if J is None:
            if depth < g.length:
                raise DepthError(f"depth {depth} cannot absorb |g| = {g.length}")
            if g.length == 0:
                J = np.arange(self.size(depth))
            else:
                J = self.index_words(self._act_rows(self.words(depth), g))
            J.setflags(write=False)
            self._act_cache[key] = J
        return J

    def refine_index(self, d_from, d_to):
        """Index array mapping each depth-``d_to`` cylinder to its depth-``d_from`` ancestor."""
        if d_to < d_from:
            raise DepthError("refinement cannot lower depth")
        n = self.size(d_to)
        if d_from == 0:
            return np.zeros(n, dtype=np.int64)
        return np.arange(n) // (self.q ** (d_to - d_from))

    def translation_index(self, h, d_in, d_out):
        """Index array ``I`` with ``p^h[x] = p[I[x]]`` for ``p`` at depth ``d_in``,
        evaluated on depth ``d_out`` cylinders (``d_out >= d_in + |h|``)."""
        if d_in == 0:
            return np.zeros(self.size(d_out), dtype=np.int64)
        need = d_in + h.length
        if d_out < need:
            raise DepthError(f"translation by |h|={h.length} needs depth {need}, got {d_out}")
        J = self.act_index(h.inverse(), need)
        return J[self.refine_index(need, d_out)]

    def to_doc(self):
        return {"type": "boundary"}


def space_from_doc(group, doc):
    kind = doc.get("type", "finite")
    if kind == "boundary":
        return BoundaryCylinders(group)
    if kind == "point":
        return FinitePoints.point(group)
    if kind == "regular":
        return FinitePoints.regular(group)
    if kind == "finite":
        labels = doc["labels"]
        act = doc["action"]
        perms = [act[name] for name in group.names]
        return FinitePoints(group, labels, perms)
    raise GroupError(f"unrecognised space document: {doc!r}")


# ---------------------------------------------------------------------------
# functions on spaces


class CXFunction:
    """A continuous function on the space: one value per point, or per cylinder
    at a stated depth."""

    __slots__ = ("space", "depth", "values")

    def __init__(self, space, values, depth=0):
        space.check_depth(depth)
        v = np.asarray(values)
        if v.dtype.kind not in "fc":
            v = v.astype(float)
        if v.shape != (space.size(depth),):
            raise ValueError(f"expected {space.size(depth)} values, got shape {v.shape}")
        v = v.copy()
        v.setflags(write=False)
        self.space = space
        self.depth = depth
        self.values = v

    @classmethod
    def constant(cls, space, c=1.0, depth=0):
        return cls(space, np.full(space.size(depth), c, dtype=np.result_type(c, float)), depth)

    @classmethod
    def indicator(cls, space, x, depth=None):
        """Indicator of a point (finite) or a cylinder (given as a word)."""
        if space.is_cylinder:
            w = space.group.parse_word(x) if not isinstance(x, tuple) else x
            d = len(w) if depth is None else depth
            v = np.zeros(space.size(len(w)))
            v[space.index_of(w)] = 1.0
            return cls(space, v, len(w)).at_depth(d)
        v = np.zeros(space.size(0))
        v[space.index_of(x)] = 1.0
        return cls(space, v, 0)

    def __repr__(self):
        return f"CXFunction(depth={self.depth}, values={self.values!r})"

    def at_depth(self, depth):
        """Same function represented at another depth (coarsening must be exact)."""
        if depth == self.depth:
            return self
        if not self.space.is_cylinder:
            raise DepthError("finite spaces only carry depth 0")
        if depth > self.depth:
            return CXFunction(self.space, self.values[self.space.refine_index(self.depth, depth)], depth)
        blocks = self.values.reshape(self.space.size(depth), -1)
        if not np.all(blocks == blocks[:, :1]):
            raise DepthError(f"function at depth {self.depth} is not constant on depth-{depth} cylinders")
        return CXFunction(self.space, blocks[:, 0], depth)

    def compact(self):
        """Coarsest exact representation."""
        f = self
        while f.depth > 0:
            try:
                f = f.at_depth(f.depth - 1)
            except DepthError:
                break
        return f

    def sup_norm(self):
        return float(np.max(np.abs(self.values)))

    def _binary(self, other, op):
        if isinstance(other, CXFunction):
            if other.space != self.space:
                raise ValueError("functions live on different spaces")
            d = max(self.depth, other.depth)
            return CXFunction(self.space, op(self.at_depth(d).values, other.at_depth(d).values), d)
        return CXFunction(self.space, op(self.values, other), self.depth)

    def __add__(self, other):
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __mul__(self, other):
        return self._binary(other, np.multiply)

    __rmul__ = __mul__

    def __neg__(self):
        return CXFunction(self.space, -self.values, self.depth)

    def conj(self):
        return CXFunction(self.space, np.conj(self.values), self.depth)

    def allclose(self, other, atol=1e-12):
        d = max(self.depth, other.depth)
        return bool(np.allclose(self.at_depth(d).values, other.at_depth(d).values, rtol=0, atol=atol))


def translate(p, g, depth=None):
    """The translate ``p^g(x) = p(g^-1.x)``.

    On the cylinder model the exact result lives at depth ``p.depth + |g|``;
    a smaller ``depth`` is accepted only when the result is constant there.
    """
    space = p.space
    if not space.is_cylinder:
        return CXFunction(space, p.values[space.perm(g.inverse())], 0)
    if p.depth == 0:
        out = p
    else:
        d_out = p.depth + g.length
        out = CXFunction(space, p.values[space.translation_index(g, p.depth, d_out)], d_out)
    if depth is None:
        return out
    if depth < out.depth:
        try:
            return out.at_depth(depth)
        except DepthError as exc:
            raise DepthError(f"insufficient cylinder depth: translate needs {out.depth}, got {depth}") from exc
    return out.at_depth(depth)
