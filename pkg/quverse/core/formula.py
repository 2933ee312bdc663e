"""
模态逻辑公式
哈希共享(hash-consing)的语法树、ASCII文法解析器、规范输出与Kripke语义求值
"""
import logging
import re
import threading
from enum import IntEnum
from typing import TYPE_CHECKING, Dict, FrozenSet, Iterable, List, Optional, Tuple

from quverse.utils.exceptions import FormulaSyntaxError, UnknownAtomError, UnknownWorldError

if TYPE_CHECKING:
    from quverse.core.kripke import KripkeModel

logger = logging.getLogger(__name__)


class Kind(IntEnum):
    """节点类型，数值顺序与规范文本首字符的ASCII顺序一致"""

    CONJ = 0      # /\{...}
    DIAMOND = 1   # <>F
    TOP = 2       # T
    BOX = 3       # []F
    DISJ = 4      # \/{...}
    ATOM = 5      # atom:id
    NOT = 6       # ~F


TAG_PATTERN = re.compile(r"[^\s,{}()]+")


class Formula:
    """
    公式节点

    节点只能通过模块级构造函数创建；结构相同的公式共享同一个实例，
    因此结构相等即对象同一。
    """

    __slots__ = ("kind", "tag", "children", "uid", "sort_key", "_hash", "_text", "_atoms")

    def __init__(self, kind: Kind, tag: Optional[str], children: Tuple["Formula", ...], uid: int):
        self.kind = kind
        self.tag = tag
        self.children = children
        self.uid = uid
        if kind == Kind.ATOM:
            self.sort_key: tuple = (int(kind), tag)
        elif kind == Kind.TOP:
            self.sort_key = (int(kind),)
        else:
            self.sort_key = (int(kind), tuple(c.sort_key for c in children))
        self._hash = hash((int(kind), tag, tuple(c._hash for c in children)))
        self._text: Optional[str] = None
        self._atoms: Optional[FrozenSet[str]] = None

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        return self is other

    def __lt__(self, other: "Formula") -> bool:
        return self.sort_key < other.sort_key

    def __repr__(self) -> str:
        return f"Formula({render(self)})"

    def __str__(self) -> str:
        return render(self)

    @property
    def operand(self) -> "Formula":
        """一元节点的子公式"""
        return self.children[0]

    @property
    def members(self) -> Tuple["Formula", ...]:
        """合取/析取的成员（已去重、规范排序）"""
        return self.children


class _InternTable:
    """全局哈希共享表，插入在锁内完成"""

    def __init__(self):
        self._table: Dict[tuple, Formula] = {}
        self._lock = threading.Lock()

    def get(self, kind: Kind, tag: Optional[str], children: Tuple[Formula, ...]) -> Formula:
        key = (int(kind), tag, tuple(c.uid for c in children))
        node = self._table.get(key)
        if node is not None:
            return node
        with self._lock:
            node = self._table.get(key)
            if node is None:
                node = Formula(kind, tag, children, len(self._table))
                self._table[key] = node
            return node

    def __len__(self) -> int:
        return len(self._table)


_interned = _InternTable()


# ---------------------------------------------------------------------------
# 构造函数
# ---------------------------------------------------------------------------

def atom(tag: str) -> Formula:
    """原子命题"""
    if not isinstance(tag, str) or TAG_PATTERN.fullmatch(tag) is None:
        raise FormulaSyntaxError(f"非法的原子标签: {tag!r}", offset=0, details={"tag": str(tag)})
    return _interned.get(Kind.ATOM, tag, ())


def top() -> Formula:
    """恒真 T，等价于空合取"""
    return _interned.get(Kind.TOP, None, ())


def neg(f: Formula) -> Formula:
    """否定"""
    return _interned.get(Kind.NOT, None, (f,))


def box(f: Formula) -> Formula:
    """必然 []"""
    return _interned.get(Kind.BOX, None, (f,))


def diamond(f: Formula) -> Formula:
    """可能 <>"""
    return _interned.get(Kind.DIAMOND, None, (f,))


def _canonical_members(fs: Iterable[Formula]) -> Tuple[Formula, ...]:
    unique = {f.uid: f for f in fs}
    return tuple(sorted(unique.values(), key=lambda f: f.sort_key))


def conj(fs: Iterable[Formula]) -> Formula:
    """有限合取；空集为T，单元素集为该元素本身"""
    members = _canonical_members(fs)
    if not members:
        return top()
    if len(members) == 1:
        return members[0]
    return _interned.get(Kind.CONJ, None, members)


def disj(fs: Iterable[Formula]) -> Formula:
    """有限析取；空集为 ~T，单元素集为该元素本身"""
    members = _canonical_members(fs)
    if not members:
        return neg(top())
    if len(members) == 1:
        return members[0]
    return _interned.get(Kind.DISJ, None, members)


def triangle(fs: Iterable[Formula]) -> Formula:
    """
    派生算子：每个成员都可能成立，且所有后继都满足某个成员

    Args:
        fs: 有限公式集合（可为空）

    Returns:
        Formula: /\\{ /\\{<>f : f in fs}, [](\\/fs) }
    """
    members = list(fs)
    return conj([conj([diamond(f) for f in members]), box(disj(members))])


def atoms_of(f: Formula) -> FrozenSet[str]:
    """公式中出现的全部原子标签"""
    if f._atoms is None:
        if f.kind == Kind.ATOM:
            f._atoms = frozenset((f.tag,))
        else:
            acc: set = set()
            for child in f.children:
                acc |= atoms_of(child)
            f._atoms = frozenset(acc)
    return f._atoms


def depth(f: Formula) -> int:
    """语法树深度（叶子为0）"""
    memo: Dict[int, int] = {}

    def visit(node: Formula) -> int:
        if node.uid not in memo:
            memo[node.uid] = 0 if not node.children else 1 + max(visit(c) for c in node.children)
        return memo[node.uid]

    return visit(f)


# ---------------------------------------------------------------------------
# 规范输出
# ---------------------------------------------------------------------------

def render(f: Formula) -> str:
    """
    输出规范文本

    Args:
        f: 任意公式

    Returns:
        str: 确定性的ASCII文本，parse(render(f)) 与 f 结构相等
    """
    if f._text is not None:
        return f._text

    kind = f.kind
    if kind == Kind.ATOM:
        text = f"atom:{f.tag}"
    elif kind == Kind.TOP:
        text = "/\\{}"
    elif kind == Kind.NOT:
        text = "~" + render(f.operand)
    elif kind == Kind.BOX:
        text = "[]" + render(f.operand)
    elif kind == Kind.DIAMOND:
        text = "<>" + render(f.operand)
    elif kind == Kind.CONJ:
        text = "/\\{" + ",".join(render(m) for m in f.members) + "}"
    else:
        text = "\\/{" + ",".join(render(m) for m in f.members) + "}"
    f._text = text
    return text


# ---------------------------------------------------------------------------
# 解析器
# ---------------------------------------------------------------------------

_UNARY_ALIASES = {
    "~": neg, "¬": neg,
    "□": box, "◇": diamond,
}


class _Parser:
    """递归下降解析器，错误位置以UTF-8字节偏移报告"""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, message: str, pos: Optional[int] = None) -> FormulaSyntaxError:
        at = self.pos if pos is None else pos
        offset = len(self.text[:at].encode("utf-8"))
        return FormulaSyntaxError(f"{message} (字节偏移 {offset})", offset=offset)

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def startswith(self, token: str) -> bool:
        return self.text.startswith(token, self.pos)

    def expect(self, token: str) -> None:
        self.skip_ws()
        if not self.startswith(token):
            raise self.error(f"期望 '{token}'")
        self.pos += len(token)

    def parse(self) -> Formula:
        result = self.formula()
        self.skip_ws()
        if self.pos != len(self.text):
            raise self.error("公式之后存在多余字符")
        return result

    def formula(self) -> Formula:
        self.skip_ws()
        if self.pos >= len(self.text):
            raise self.error("公式意外结束")

        ch = self.text[self.pos]
        if self.startswith("atom:"):
            self.pos += len("atom:")
            match = TAG_PATTERN.match(self.text, self.pos)
            if match is None:
                raise self.error("缺少原子标签")
            self.pos = match.end()
            return atom(match.group(0))
        if ch in _UNARY_ALIASES:
            self.pos += 1
            return _UNARY_ALIASES[ch](self.formula())
        if self.startswith("[]"):
            self.pos += 2
            return box(self.formula())
        if self.startswith("<>"):
            self.pos += 2
            return diamond(self.formula())
        if self.startswith("/\\") or ch == "⋀":
            self.pos += 1 if ch == "⋀" else 2
            return conj(self.member_list())
        if self.startswith("\\/") or ch == "⋁":
            self.pos += 1 if ch == "⋁" else 2
            return disj(self.member_list())
        if ch in ("T", "⊤"):
            self.pos += 1
            return top()
        if ch == "(":
            self.pos += 1
            inner = self.formula()
            self.expect(")")
            return inner
        raise self.error(f"无法识别的字符 {ch!r}")

    def member_list(self) -> List[Formula]:
        self.expect("{")
        self.skip_ws()
        members: List[Formula] = []
        if self.startswith("}"):
            self.pos += 1
            return members
        while True:
            members.append(self.formula())
            self.skip_ws()
            if self.startswith(","):
                self.pos += 1
                continue
            if self.startswith("}"):
                self.pos += 1
                return members
            raise self.error("期望 ',' 或 '}'")


def parse(text: str) -> Formula:
    """
    解析公式文本

    Args:
        text: 文法 `atom:<id>`, `T`, `~F`, `/\\{F,...}`, `\\/{F,...}`, `[]F`, `<>F`, 括号；
              □ ◇ ¬ ⊤ ⋀ ⋁ 作为输入别名

    Returns:
        Formula: 哈希共享的规范公式
    """
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# 语义求值
# ---------------------------------------------------------------------------

class Evaluator:
    """
    Kripke语义求值器

    备忘表按 (世界, 公式) 记录，生命周期与求值器实例相同，不在调用方之间共享。
    """

    def __init__(self, model: "KripkeModel"):
        self.model = model
        self._memo: Dict[Tuple[str, int], bool] = {}
        self._checked: set = set()
        self._domain = model.atom_domain

    def evaluate(self, world: str, f: Formula) -> bool:
        """计算 v_world(f)"""
        if not self.model.has_world(world):
            raise UnknownWorldError(f"未知世界: {world}", details={"world": world})
        if f.uid not in self._checked:
            missing = atoms_of(f) - self._domain
            if missing:
                raise UnknownAtomError(
                    f"原子标签不在赋值域中: {sorted(missing)}",
                    details={"atoms": sorted(missing)}
                )
            self._checked.add(f.uid)
        return self._eval(world, f)

    def _eval(self, world: str, f: Formula) -> bool:
        key = (world, f.uid)
        cached = self._memo.get(key)
        if cached is not None:
            return cached

        kind = f.kind
        if kind == Kind.ATOM:
            value = f.tag in self.model.labels(world)
        elif kind == Kind.TOP:
            value = True
        elif kind == Kind.NOT:
            value = not self._eval(world, f.operand)
        elif kind == Kind.CONJ:
            value = all(self._eval(world, m) for m in f.members)
        elif kind == Kind.DISJ:
            value = any(self._eval(world, m) for m in f.members)
        elif kind == Kind.BOX:
            value = all(self._eval(s, f.operand) for s in self.model.successors(world))
        else:
            value = any(self._eval(s, f.operand) for s in self.model.successors(world))

        self._memo[key] = value
        return value


def evaluate(model: "KripkeModel", world: str, f: Formula) -> bool:
    """
    在模型的某个世界上求值公式

    Args:
        model: Kripke模型
        world: 世界标识
        f: 公式，其原子标签必须都在模型赋值域中

    Returns:
        bool: 真值
    """
    return Evaluator(model).evaluate(world, f)
