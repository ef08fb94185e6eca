//! Versioned JSON envelopes for everything persisted between pipeline stages.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Payload types that can be written as a tagged, versioned file.
pub trait Artifact: Serialize + DeserializeOwned {
    /// Stable identifier stored in the envelope, e.g. `"checkpoint"`.
    const KIND: &'static str;
    const VERSION: u32;
}

#[derive(Serialize)]
struct EnvelopeRef<'a, A> {
    kind: &'a str,
    version: u32,
    data: &'a A,
}

#[derive(Deserialize)]
struct EnvelopeOwned {
    kind: String,
    version: u32,
    data: serde_json::Value,
}

pub fn to_json_string<A: Artifact>(artifact: &A) -> Result<String> {
    let env = EnvelopeRef {
        kind: A::KIND,
        version: A::VERSION,
        data: artifact,
    };
    let mut s = serde_json::to_string_pretty(&env)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json_str<A: Artifact>(text: &str) -> Result<A> {
    let env: EnvelopeOwned = serde_json::from_str(text)?;
    if env.kind != A::KIND {
        return Err(Error::Data(format!(
            "expected a '{}' artifact, found '{}'",
            A::KIND,
            env.kind
        )));
    }
    if env.version != A::VERSION {
        return Err(Error::Version {
            found: env.version,
            expected: A::VERSION,
        });
    }
    Ok(serde_json::from_value(env.data)?)
}

pub fn save<A: Artifact>(artifact: &A, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, to_json_string(artifact)?).map_err(|e| Error::io(path, e))
}

pub fn load<A: Artifact>(path: impl AsRef<Path>) -> Result<A> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Thing {
        x: f64,
    }
    impl Artifact for Thing {
        const KIND: &'static str = "thing";
        const VERSION: u32 = 2;
    }

    #[derive(Debug, Serialize, Deserialize)]
    struct Other {
        x: f64,
    }
    impl Artifact for Other {
        const KIND: &'static str = "other";
        const VERSION: u32 = 2;
    }

    #[test]
    fn envelope_checks_kind_and_version() {
        let s = to_json_string(&Thing { x: 0.1 }).unwrap();
        assert_eq!(from_json_str::<Thing>(&s).unwrap(), Thing { x: 0.1 });
        assert!(matches!(from_json_str::<Other>(&s), Err(Error::Data(_))));
        let bumped = s.replace("\"version\": 2", "\"version\": 9");
        assert!(matches!(
            from_json_str::<Thing>(&bumped),
            Err(Error::Version { found: 9, expected: 2 })
        ));
    }
}
