"""
自定义异常类
"""

from typing import Optional, Any, Dict


class BaseAppException(Exception):
    """应用基础异常类"""

    def __init__(
        self,
        message: str,
        error_code: Optional[str] = None,
        details: Optional[Dict[str, Any]] = None
    ):
        self.message = message
        self.error_code = error_code
        self.details = details or {}
        super().__init__(self.message)

    def to_dict(self) -> Dict[str, Any]:
        """转换为错误响应结构"""
        return {
            "success": False,
            "error": {
                "code": self.error_code,
                "message": self.message,
                "details": self.details
            }
        }


class FormulaSyntaxError(BaseAppException):
    """公式语法错误，details.offset 为字节偏移"""

    def __init__(
        self,
        message: str,
        offset: int,
        error_code: str = "FORMULA_SYNTAX_ERROR",
        details: Optional[Dict[str, Any]] = None
    ):
        self.offset = offset
        super().__init__(message, error_code, {"offset": offset, **(details or {})})


class UnknownWorldError(BaseAppException):
    """世界不存在异常"""

    def __init__(
        self,
        message: str,
        error_code: str = "UNKNOWN_WORLD",
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message, error_code, details)


class UnknownAtomError(BaseAppException):
    """原子命题不在赋值域中"""

    def __init__(
        self,
        message: str,
        error_code: str = "UNKNOWN_ATOM",
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message, error_code, details)


class ModelValidationError(BaseAppException):
    """Kripke模型校验失败"""

    def __init__(
        self,
        message: str,
        error_code: str = "MODEL_VALIDATION_ERROR",
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message, error_code, details)


class SeedValidationError(BaseAppException):
    """种子图校验失败"""

    def __init__(
        self,
        message: str,
        error_code: str = "SEED_VALIDATION_ERROR",
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message, error_code, details)


class CapExceededError(BaseAppException):
    """展开深度或节点数超过上限"""

    def __init__(
        self,
        message: str,
        error_code: str = "CAP_EXCEEDED",
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message, error_code, details)


class NotATreeError(BaseAppException):
    """邻近关系的非自反部分不是树"""

    def __init__(
        self,
        message: str,
        error_code: str = "NOT_A_TREE",
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message, error_code, details)


class UnknownElementError(BaseAppException):
    """元素不在载体中"""

    def __init__(
        self,
        message: str,
        error_code: str = "UNKNOWN_ELEMENT",
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message, error_code, details)


class EvidenceError(BaseAppException):
    """证据理论计算异常"""

    def __init__(
        self,
        message: str,
        error_code: str = "EVIDENCE_ERROR",
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message, error_code, details)


class NumericalError(BaseAppException):
    """数值计算异常"""

    def __init__(
        self,
        message: str,
        error_code: str = "NUMERICAL_ERROR",
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message, error_code, details)


class DegenerateNormalizerError(BaseAppException):
    """贝叶斯归一化常数退化"""

    def __init__(
        self,
        message: str,
        error_code: str = "DEGENERATE_NORMALIZER",
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message, error_code, details)


class BisimulationError(BaseAppException):
    """互模拟校验前置条件不满足"""

    def __init__(
        self,
        message: str,
        error_code: str = "BISIMULATION_ERROR",
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message, error_code, details)


class ConfigurationError(BaseAppException):
    """配置异常"""

    def __init__(
        self,
        message: str,
        error_code: str = "CONFIG_ERROR",
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message, error_code, details)


class InputFileError(BaseAppException):
    """输入文件格式错误"""

    def __init__(
        self,
        message: str,
        error_code: str = "INPUT_FILE_ERROR",
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message, error_code, details)
