import csv
import io
import json
import logging
import math
from pathlib import Path
from typing import Any, Iterable, List, Sequence, Type, TypeVar, Union

from pydantic import BaseModel, ValidationError

from quverse.utils.exceptions import InputFileError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
M = TypeVar("M", bound=BaseModel)


def format_float(value: float) -> str:
    """17位有效数字；非有限值输出为 null"""
    if not math.isfinite(value):
        return "null"
    text = format(value, ".17g")
    # 保证JSON中仍是浮点字面量
    if all(ch not in text for ch in ".eE"):
        text += ".0"
    return text


def to_json_text(obj: Any) -> str:
    """
    确定性的紧凑JSON文本

    Args:
        obj: dict/list/tuple/str/int/float/bool/None 或 pydantic 模型

    Returns:
        str: 键排序、浮点数17位有效数字的JSON
    """
    if isinstance(obj, BaseModel):
        obj = obj.model_dump(mode="python")
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(int(obj))
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        items = sorted((str(k), v) for k, v in obj.items())
        return "{" + ",".join(f"{json.dumps(k, ensure_ascii=False)}:{to_json_text(v)}" for k, v in items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(to_json_text(v) for v in obj) + "]"
    # numpy 标量
    if hasattr(obj, "item"):
        return to_json_text(obj.item())
    if hasattr(obj, "tolist"):
        return to_json_text(obj.tolist())
    raise TypeError(f"无法序列化的类型: {type(obj).__name__}")


def _ensure_parent(path: PathLike) -> Path:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_text(path: PathLike, text: str) -> Path:
    path = _ensure_parent(path)
    path.write_text(text, encoding="utf-8", newline="\n")
    logger.info(f"写入文件: {path}")
    return path


def write_json(path: PathLike, obj: Any) -> Path:
    return write_text(path, to_json_text(obj) + "\n")


def write_jsonl(path: PathLike, rows: Iterable[Any]) -> Path:
    return write_text(path, "".join(to_json_text(row) + "\n" for row in rows))


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """CSV文本，浮点数17位有效数字"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_float(v) if isinstance(v, float) else v for v in row])
    return buffer.getvalue()


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    return write_text(path, csv_text(header, rows))


def load_json_file(path: PathLike, schema: Type[M]) -> M:
    """
    读取并校验JSON输入文件

    Args:
        path: 文件路径
        schema: pydantic 模型类

    Returns:
        校验后的模型实例；文件缺失、JSON格式错误或校验失败时抛出 InputFileError
    """
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as e:
        raise InputFileError(f"无法读取文件: {path}", details={"path": str(path), "error": str(e)})
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as e:
        raise InputFileError(
            f"JSON格式错误: {path}:{e.lineno}:{e.colno}",
            details={"path": str(path), "location": [e.lineno, e.colno], "error": e.msg}
        )
    try:
        return schema.model_validate(data)
    except ValidationError as e:
        first = e.errors(include_url=False)[0]
        raise InputFileError(
            f"文件内容校验失败: {path}",
            details={
                "path": str(path),
                "location": [str(p) for p in first.get("loc", ())],
                "error": first.get("msg"),
            }
        )


def parse_list(text: str) -> List[str]:
    """逗号分隔的列表参数"""
    return [item.strip() for item in text.split(",") if item.strip()]
