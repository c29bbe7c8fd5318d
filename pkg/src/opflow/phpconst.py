"""Predefined PHP names shared by the frontend and the engine."""

TAINT_SOURCES = {"_GET": "GET", "_POST": "POST", "_FILES": "FILES",
                 "_COOKIE": "COOKIE", "_REQUEST": "REQUEST"}
SUPERGLOBALS = frozenset(list(TAINT_SOURCES) + ["_SERVER", "_SESSION", "_ENV", "GLOBALS"])

PREDEFINED_CONSTANTS = {
    "PHP_EOL": "\n",
    "DIRECTORY_SEPARATOR": "/",
    "PATH_SEPARATOR": ":",
    "PHP_INT_MAX": 2**63 - 1,
    "PHP_INT_MIN": -2**63,
    "PHP_INT_SIZE": 8,
    "PHP_VERSION": "8.3.0",
    "PHP_MAJOR_VERSION": 8,
    "PHP_OS": "Linux",
    "PHP_OS_FAMILY": "Linux",
    "M_PI": 3.141592653589793,
    "E_ERROR": 1, "E_WARNING": 2, "E_PARSE": 4, "E_NOTICE": 8,
    "E_STRICT": 2048, "E_DEPRECATED": 8192, "E_ALL": 32767,
    "ENT_COMPAT": 2, "ENT_QUOTES": 3, "ENT_NOQUOTES": 0, "ENT_HTML401": 0,
    "ENT_XML1": 16, "ENT_XHTML": 32, "ENT_HTML5": 48, "ENT_IGNORE": 4,
    "ENT_SUBSTITUTE": 8,
    "COUNT_NORMAL": 0, "COUNT_RECURSIVE": 1,
    "SORT_REGULAR": 0, "SORT_NUMERIC": 1, "SORT_STRING": 2,
    "STR_PAD_LEFT": 0, "STR_PAD_RIGHT": 1, "STR_PAD_BOTH": 2,
    "JSON_HEX_TAG": 1, "JSON_HEX_QUOT": 8, "JSON_UNESCAPED_SLASHES": 64,
    "JSON_PRETTY_PRINT": 128, "JSON_UNESCAPED_UNICODE": 256,
    "JSON_THROW_ON_ERROR": 4194304,
    "PREG_SPLIT_NO_EMPTY": 1,
    "FILE_APPEND": 8, "LOCK_EX": 2,
    "INPUT_POST": 0, "INPUT_GET": 1, "INPUT_COOKIE": 2,
    "FILTER_DEFAULT": 516, "FILTER_VALIDATE_INT": 257, "FILTER_VALIDATE_EMAIL": 274,
    "FILTER_SANITIZE_SPECIAL_CHARS": 515, "FILTER_SANITIZE_NUMBER_INT": 519,
    "MYSQLI_ASSOC": 1, "MYSQLI_NUM": 2, "MYSQLI_BOTH": 3,
    "MYSQL_ASSOC": 1,
}
