use super::ManifestError;

/// Normalize a package name: lowercase, with every run of `-`, `_` or `.`
/// collapsed into a single `-`.
pub fn normalize_package_name(raw: &str) -> Result<String, ManifestError> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(ManifestError::EmptyName);
    }
    let mut out = String::with_capacity(trimmed.len());
    let mut in_separator = false;
    for ch in trimmed.chars() {
        match ch {
            'a'..='z' | '0'..='9' => {
                out.push(ch);
                in_separator = false;
            }
            'A'..='Z' => {
                out.push(ch.to_ascii_lowercase());
                in_separator = false;
            }
            '-' | '_' | '.' => {
                if !in_separator {
                    out.push('-');
                }
                in_separator = true;
            }
            other => return Err(ManifestError::IllegalCharacter(other)),
        }
    }
    let out = out.trim_matches('-');
    if out.is_empty() {
        // Only separators, e.g. "_.-".
        return Err(ManifestError::EmptyName);
    }
    Ok(out.to_string())
}

/// True if `name` already satisfies the normalized-name rules.
pub fn is_normalized(name: &str) -> bool {
    let bytes = name.as_bytes();
    !bytes.is_empty()
        && bytes
            .iter()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || *b == b'-')
        && bytes[0] != b'-'
        && bytes[bytes.len() - 1] != b'-'
        && !name.contains("--")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(normalize_package_name("SpaCy").unwrap(), "spacy");
        assert_eq!(normalize_package_name("geo_pandas").unwrap(), "geo-pandas");
        assert_eq!(normalize_package_name("a..b").unwrap(), "a-b");
        assert_eq!(normalize_package_name("  Data.Table ").unwrap(), "data-table");
        assert_eq!(normalize_package_name("x").unwrap(), "x");
    }

    #[test]
    fn errors() {
        assert!(matches!(normalize_package_name(""), Err(ManifestError::EmptyName)));
        assert!(matches!(normalize_package_name("  \t"), Err(ManifestError::EmptyName)));
        assert!(matches!(normalize_package_name("__"), Err(ManifestError::EmptyName)));
        assert!(matches!(
            normalize_package_name("pan das"),
            Err(ManifestError::IllegalCharacter(' '))
        ));
        assert!(matches!(
            normalize_package_name("numpy[extra]"),
            Err(ManifestError::IllegalCharacter('['))
        ));
    }

    #[test]
    fn leading_and_trailing_separators_are_dropped() {
        assert_eq!(normalize_package_name("_private_").unwrap(), "private");
    }

    proptest! {
        #[test]
        fn idempotent_and_well_formed(raw in "[A-Za-z0-9._-]{1,24}") {
            if let Ok(once) = normalize_package_name(&raw) {
                prop_assert!(is_normalized(&once), "{once}");
                prop_assert_eq!(normalize_package_name(&once).unwrap(), once);
            }
        }
    }
}
