use std::collections::HashSet;

use serde::{Deserialize, Serialize};

const C11_KEYWORDS: &[&str] = &[
    "auto",
    "break",
    "case",
    "char",
    "const",
    "continue",
    "default",
    "do",
    "double",
    "else",
    "enum",
    "extern",
    "float",
    "for",
    "goto",
    "if",
    "inline",
    "int",
    "long",
    "register",
    "restrict",
    "return",
    "short",
    "signed",
    "sizeof",
    "static",
    "struct",
    "switch",
    "typedef",
    "union",
    "unsigned",
    "void",
    "volatile",
    "while",
    "_Alignas",
    "_Alignof",
    "_Atomic",
    "_Bool",
    "_Complex",
    "_Generic",
    "_Imaginary",
    "_Noreturn",
    "_Static_assert",
    "_Thread_local",
];

const CPP14_KEYWORDS: &[&str] = &[
    "alignas",
    "alignof",
    "and",
    "and_eq",
    "asm",
    "bitand",
    "bitor",
    "bool",
    "catch",
    "char16_t",
    "char32_t",
    "class",
    "compl",
    "constexpr",
    "const_cast",
    "decltype",
    "delete",
    "dynamic_cast",
    "explicit",
    "export",
    "false",
    "friend",
    "mutable",
    "namespace",
    "new",
    "noexcept",
    "not",
    "not_eq",
    "nullptr",
    "operator",
    "or",
    "or_eq",
    "private",
    "protected",
    "public",
    "reinterpret_cast",
    "static_assert",
    "static_cast",
    "template",
    "this",
    "thread_local",
    "throw",
    "true",
    "try",
    "typeid",
    "typename",
    "using",
    "virtual",
    "wchar_t",
    "xor",
    "xor_eq",
];

const BUILTIN_TYPES: &[&str] =
    &["int", "char", "bool", "float", "double", "void", "long", "short", "unsigned", "signed", "size_t"];

const LIBC_CALLS: &[&str] = &[
    "malloc",
    "calloc",
    "realloc",
    "free",
    "alloca",
    "memcpy",
    "memmove",
    "memset",
    "memcmp",
    "memchr",
    "strcpy",
    "strncpy",
    "strcat",
    "strncat",
    "strcmp",
    "strncmp",
    "strlen",
    "strnlen",
    "strdup",
    "strndup",
    "strchr",
    "strrchr",
    "strstr",
    "strtok",
    "strerror",
    "sprintf",
    "snprintf",
    "vsprintf",
    "vsnprintf",
    "printf",
    "fprintf",
    "vprintf",
    "vfprintf",
    "scanf",
    "sscanf",
    "fscanf",
    "gets",
    "fgets",
    "puts",
    "fputs",
    "getchar",
    "putchar",
    "getc",
    "putc",
    "fgetc",
    "fputc",
    "fopen",
    "fclose",
    "fread",
    "fwrite",
    "fseek",
    "ftell",
    "fflush",
    "open",
    "close",
    "read",
    "write",
    "lseek",
    "exit",
    "abort",
    "atoi",
    "atol",
    "atof",
    "strtol",
    "strtoul",
    "strtod",
    "system",
    "popen",
    "pclose",
    "execl",
    "execv",
    "execvp",
    "fork",
    "getenv",
    "setenv",
    "rand",
    "srand",
    "time",
    "sleep",
    "assert",
    "perror",
    "qsort",
    "bsearch",
    "mmap",
    "munmap",
    "socket",
    "bind",
    "listen",
    "accept",
    "connect",
    "send",
    "recv",
];

/// Name tables used to bin identifiers. Every list replaces the built-in one when set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LexerConfig {
    pub keywords: Vec<String>,
    pub types: Vec<String>,
    pub api_calls: Vec<String>,
}

impl Default for LexerConfig {
    fn default() -> Self {
        let owned = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let mut keywords = owned(C11_KEYWORDS);
        keywords.extend(owned(CPP14_KEYWORDS));
        Self { keywords, types: owned(BUILTIN_TYPES), api_calls: owned(LIBC_CALLS) }
    }
}

pub(crate) struct NameTables {
    pub keywords: HashSet<String>,
    pub types: HashSet<String>,
    pub api_calls: HashSet<String>,
}

impl From<&LexerConfig> for NameTables {
    fn from(cfg: &LexerConfig) -> Self {
        let set = |xs: &[String]| xs.iter().cloned().collect::<HashSet<_>>();
        Self { keywords: set(&cfg.keywords), types: set(&cfg.types), api_calls: set(&cfg.api_calls) }
    }
}
