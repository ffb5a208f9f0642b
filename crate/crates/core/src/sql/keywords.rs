//! The shipped reserved-word list.
//!
//! One list serves three purposes: the lexer classifies a word as a keyword
//! when its upper-cased form is listed here, identifier masking never aliases
//! a listed word, and the keyword-match half of CodeBLEU counts occurrences of
//! listed words. Entries cover SQL and PL/SQL / PL/pgSQL keywords, built-in
//! data types and the common built-in functions of both dialects.
//!
//! The list is versioned; bump [`RESERVED_WORDS_VERSION`] whenever it changes
//! because masking and CodeBLEU results depend on it.

use std::collections::HashSet;
use std::sync::OnceLock;

pub const RESERVED_WORDS_VERSION: u32 = 1;

const RESERVED_WORDS: &[&str] = &[
    // statements and clauses
    "ALL", "ALTER", "AND", "ANY", "AS", "ASC", "BETWEEN", "BY", "CASCADE", "CASE", "CHECK",
    "COLUMN", "COMMENT", "COMMIT", "CONSTRAINT", "CREATE", "CROSS", "CURRENT", "DEFAULT",
    "DELETE", "DESC", "DISTINCT", "DROP", "ELSE", "END", "ESCAPE", "EXCEPT", "EXISTS",
    "FETCH", "FIRST", "FOR", "FOREIGN", "FROM", "FULL", "GRANT", "GROUP", "HAVING", "IN",
    "INDEX", "INNER", "INSERT", "INTERSECT", "INTO", "IS", "JOIN", "KEY", "LEFT", "LIKE",
    "LIMIT", "MERGE", "MINUS", "NATURAL", "NEXT", "NOT", "NULL", "NULLS", "OF", "OFFSET", "ON",
    "ONLY", "OR", "ORDER", "OUTER", "OVER", "PARTITION", "PRIMARY", "REFERENCES", "RENAME",
    "REPLACE", "REVOKE", "RIGHT", "ROLLBACK", "ROW", "ROWS", "SAVEPOINT", "SELECT", "SEQUENCE",
    "SET", "TABLE", "THEN", "TO", "TRUNCATE", "UNION", "UNIQUE", "UPDATE", "USING", "VALUES",
    "VIEW", "WHEN", "WHERE", "WITH", "MATERIALIZED", "TEMPORARY", "GLOBAL", "PRESERVE",
    "RETURNING", "CONFLICT", "DO", "NOTHING", "MATCHED", "START", "INCREMENT", "MAXVALUE",
    "MINVALUE", "CYCLE", "NOCYCLE", "ORDER", "ENABLE", "DISABLE", "RECURSIVE", "LATERAL",
    "ILIKE", "SIMILAR", "TRUE", "FALSE", "UNKNOWN", "ASYMMETRIC", "SYMMETRIC", "PRIOR",
    "CONNECT", "LEVEL", "ROWNUM", "ROWID",
    // procedural
    "BEGIN", "BODY", "BULK", "CLOSE", "COLLECT", "CONSTANT", "CONTINUE", "CURSOR", "DECLARE",
    "EACH", "ELSIF", "ELSEIF", "EXCEPTION", "EXECUTE", "EXIT", "FORALL", "FUNCTION", "GOTO",
    "IF", "IMMEDIATE", "INOUT", "LOOP", "OPEN", "OTHERS", "OUT", "PACKAGE", "PERFORM",
    "PRAGMA", "PROCEDURE", "RAISE", "RAISE_APPLICATION_ERROR", "RECORD", "RETURN", "RETURNS",
    "REVERSE", "ROWTYPE", "SQLCODE", "SQLERRM", "SQLSTATE", "TRIGGER", "TYPE", "WHILE",
    "BEFORE", "AFTER", "INSTEAD", "STATEMENT", "NEW", "OLD", "LANGUAGE", "PLPGSQL", "NOTICE",
    "FOUND", "NO_DATA_FOUND", "TOO_MANY_ROWS", "DUP_VAL_ON_INDEX", "ZERO_DIVIDE",
    "AUTONOMOUS_TRANSACTION", "EDITIONABLE", "NONEDITIONABLE", "DETERMINISTIC", "VOLATILE",
    "STABLE", "IMMUTABLE", "STRICT", "SECURITY", "DEFINER", "INVOKER", "AUTHID", "ATOMIC",
    "QUERY", "GET", "DIAGNOSTICS", "ROW_COUNT", "USING", "CALL",
    // physical storage
    "TABLESPACE", "STORAGE", "PCTFREE", "PCTUSED", "INITRANS", "MAXTRANS", "LOGGING",
    "NOLOGGING", "COMPRESS", "NOCOMPRESS", "CACHE", "NOCACHE", "INITIAL", "MINEXTENTS",
    "MAXEXTENTS", "PCTINCREASE", "BUFFER_POOL", "UNLIMITED",
    // data types
    "BIGINT", "BINARY_DOUBLE", "BINARY_FLOAT", "BINARY_INTEGER", "BLOB", "BOOLEAN", "BYTEA",
    "CHAR", "CHARACTER", "CLOB", "DATE", "DECIMAL", "DOUBLE", "FLOAT", "INT", "INTEGER",
    "INTERVAL", "JSON", "JSONB", "LONG", "NCHAR", "NCLOB", "NUMBER", "NUMERIC", "NVARCHAR2",
    "PLS_INTEGER", "PRECISION", "RAW", "REAL", "SERIAL", "BIGSERIAL", "SMALLINT", "TEXT",
    "TIME", "TIMESTAMP", "TIMESTAMPTZ", "VARCHAR", "VARCHAR2", "XMLTYPE", "ZONE", "VARYING",
    "IDENTITY", "GENERATED", "ALWAYS", "UUID",
    // built-in functions and pseudo-columns
    "ABS", "ADD_MONTHS", "AVG", "CAST", "CEIL", "COALESCE", "CONCAT", "COUNT", "CURRENT_DATE",
    "CURRENT_TIMESTAMP", "DECODE", "EXTRACT", "FLOOR", "GREATEST", "INITCAP", "INSTR",
    "LAST_DAY", "LEAST", "LENGTH", "LOWER", "LPAD", "LTRIM", "MAX", "MIN", "MOD", "MONTHS_BETWEEN",
    "NEXTVAL", "CURRVAL", "NOW", "NULLIF", "NVL", "NVL2", "POSITION", "POWER", "REGEXP_LIKE",
    "REGEXP_REPLACE", "REGEXP_SUBSTR", "ROUND", "ROW_NUMBER", "RANK", "DENSE_RANK", "RPAD",
    "RTRIM", "STRPOS", "SUBSTR", "SUBSTRING", "SUM", "SYSDATE", "SYSTIMESTAMP", "TO_CHAR",
    "TO_DATE", "TO_NUMBER", "TO_TIMESTAMP", "TRIM", "TRUNC", "UPPER", "DUAL", "LISTAGG",
    "STRING_AGG", "DATE_TRUNC", "AGE", "INTERVAL", "EPOCH", "DAY", "MONTH", "YEAR", "HOUR",
    "MINUTE", "SECOND", "WITHIN", "LOCALTIMESTAMP",
];

fn reserved_set() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| RESERVED_WORDS.iter().copied().collect())
}

/// `true` when `word` (any case) is in the reserved list.
pub fn is_reserved(word: &str) -> bool {
    if word.bytes().all(|b| !b.is_ascii_lowercase()) {
        reserved_set().contains(word)
    } else {
        reserved_set().contains(word.to_ascii_uppercase().as_str())
    }
}

/// All reserved words, deduplicated and sorted.
pub fn reserved_words() -> Vec<&'static str> {
    let mut words: Vec<_> = reserved_set().iter().copied().collect();
    words.sort_unstable();
    words
}

/// Words the parser never accepts where an identifier is expected.
///
/// Everything else in the reserved list (types, built-ins, soft keywords) may
/// still name a column or variable.
pub(crate) fn is_hard_reserved(word_upper: &str) -> bool {
    matches!(
        word_upper,
        "SELECT"
            | "FROM"
            | "WHERE"
            | "GROUP"
            | "HAVING"
            | "ORDER"
            | "UNION"
            | "INTERSECT"
            | "EXCEPT"
            | "MINUS"
            | "INSERT"
            | "UPDATE"
            | "DELETE"
            | "INTO"
            | "VALUES"
            | "SET"
            | "AND"
            | "OR"
            | "NOT"
            | "ON"
            | "JOIN"
            | "INNER"
            | "LEFT"
            | "RIGHT"
            | "FULL"
            | "CROSS"
            | "OUTER"
            | "WHEN"
            | "THEN"
            | "ELSE"
            | "ELSIF"
            | "ELSEIF"
            | "END"
            | "BEGIN"
            | "DECLARE"
            | "EXCEPTION"
            | "IS"
            | "AS"
            | "CREATE"
            | "TABLE"
            | "CASE"
            | "IN"
            | "BETWEEN"
            | "LIKE"
            | "ILIKE"
            | "BY"
            | "DISTINCT"
            | "USING"
            | "LIMIT"
            | "OFFSET"
            | "FETCH"
            | "LOOP"
            | "IF"
            | "RETURN"
            | "RETURNING"
            | "WITH"
            | "NULL"
            | "CONSTRAINT"
            | "PRIMARY"
            | "FOREIGN"
            | "CHECK"
            | "UNIQUE"
            | "REFERENCES"
            | "DEFAULT"
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_is_case_insensitive() {
        assert!(is_reserved("select"));
        assert!(is_reserved("Varchar2"));
        assert!(!is_reserved("app_users"));
    }

    #[test]
    fn user_is_not_reserved() {
        // USER and USER_ID must both be maskable identifiers.
        assert!(!is_reserved("USER"));
        assert!(!is_reserved("USER_ID"));
    }

    #[test]
    fn hard_reserved_are_reserved() {
        for w in ["SELECT", "FROM", "END", "BEGIN", "DEFAULT"] {
            assert!(is_hard_reserved(w) && is_reserved(w));
        }
    }
}
