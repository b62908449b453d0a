use std::fmt;
use std::path::PathBuf;

use super::DirectoryError;

const SCHEME: &str = "db://";

/// A destination that activates a data pipe instead of a disk file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReservedTarget {
    pub system_name: String,
    pub workers: Option<u32>,
    pub query_id: Option<String>,
}

impl ReservedTarget {
    pub fn new(system_name: impl Into<String>) -> Self {
        ReservedTarget { system_name: system_name.into(), workers: None, query_id: None }
    }

    /// Worker count, defaulting to 1 when the target carries no metadata.
    pub fn worker_count(&self) -> u32 {
        self.workers.unwrap_or(1)
    }

    /// The target's query id, or `token` when it has none.
    pub fn query_id_or<'a>(&'a self, token: &'a str) -> &'a str {
        self.query_id.as_deref().unwrap_or(token)
    }
}

impl fmt::Display for ReservedTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{SCHEME}{}", self.system_name)?;
        let mut sep = '?';
        if let Some(w) = self.workers {
            write!(f, "{sep}workers={w}")?;
            sep = '&';
        }
        if let Some(q) = &self.query_id {
            write!(f, "{sep}query={q}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    File(PathBuf),
    Reserved(ReservedTarget),
}

/// Alternate reserved-name pattern for engines that only accept file paths,
/// e.g. `/tmp/__reserved__[Name]`. `[Name]` marks the system name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReservedTemplate {
    prefix: String,
    suffix: String,
}

impl ReservedTemplate {
    pub const PLACEHOLDER: &'static str = "[Name]";

    pub fn new(template: &str) -> Result<Self, DirectoryError> {
        let (prefix, suffix) =
            template.split_once(Self::PLACEHOLDER).ok_or_else(|| DirectoryError::BadTemplate(template.to_owned()))?;
        if prefix.is_empty() || suffix.contains(Self::PLACEHOLDER) {
            return Err(DirectoryError::BadTemplate(template.to_owned()));
        }
        Ok(ReservedTemplate { prefix: prefix.to_owned(), suffix: suffix.to_owned() })
    }

    fn match_name<'a>(&self, base: &'a str) -> Option<&'a str> {
        base.strip_prefix(self.prefix.as_str())?.strip_suffix(self.suffix.as_str())
    }

    pub fn render(&self, name: &str) -> String {
        format!("{}{}{}", self.prefix, name, self.suffix)
    }
}

/// Parses `db://NAME[?workers=K][&query=ID]` (parameters in any order), or a
/// path matching `template`, as a reserved target; anything else is a file.
pub fn parse_target(s: &str, template: Option<&ReservedTemplate>) -> Result<Target, DirectoryError> {
    if let Some(rest) = s.strip_prefix(SCHEME) {
        let (name, query) = rest.split_once('?').unwrap_or((rest, ""));
        return reserved(s, name, query);
    }
    if let Some(t) = template {
        let (base, query) = s.split_once('?').unwrap_or((s, ""));
        if let Some(name) = t.match_name(base) {
            return reserved(s, name, query);
        }
    }
    Ok(Target::File(PathBuf::from(s)))
}

fn reserved(s: &str, name: &str, query: &str) -> Result<Target, DirectoryError> {
    let bad = |why: &str| DirectoryError::BadTarget { target: s.to_owned(), reason: why.to_owned() };
    if name.is_empty() {
        return Err(bad("empty system name"));
    }
    let mut t = ReservedTarget::new(name);
    for param in query.split('&').filter(|p| !p.is_empty()) {
        match param.split_once('=') {
            Some(("workers", v)) => {
                let w: u32 = v.parse().map_err(|_| bad("workers is not a number"))?;
                if w == 0 {
                    return Err(bad("workers must be at least 1"));
                }
                t.workers = Some(w);
            }
            Some(("query", v)) if !v.is_empty() => t.query_id = Some(v.to_owned()),
            _ => return Err(bad(&format!("unknown parameter {param:?}"))),
        }
    }
    Ok(Target::Reserved(t))
}
