//! Hex serde adapters for 32-byte words.

pub mod word {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::hash::Word;

    pub fn serialize<S: Serializer>(w: &Word, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("0x{}", hex::encode(w)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Word, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).map_err(serde::de::Error::custom)
    }

    pub fn parse(s: &str) -> Result<Word, hex::FromHexError> {
        let mut out = [0u8; 32];
        hex::decode_to_slice(s.trim_start_matches("0x"), &mut out)?;
        Ok(out)
    }
}

pub mod map {
    use std::collections::BTreeMap;

    use serde::ser::SerializeMap;
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::hash::Word;

    pub fn serialize<S: Serializer>(m: &BTreeMap<Word, Word>, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(m.len()))?;
        for (k, v) in m {
            map.serialize_entry(&hex::encode(k), &hex::encode(v))?;
        }
        map.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<Word, Word>, D::Error> {
        let raw = BTreeMap::<String, String>::deserialize(d)?;
        raw.iter()
            .map(|(k, v)| {
                Ok((
                    super::word::parse(k).map_err(serde::de::Error::custom)?,
                    super::word::parse(v).map_err(serde::de::Error::custom)?,
                ))
            })
            .collect()
    }
}
