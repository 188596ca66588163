//! Three-level label hierarchy: descriptor (ID) → microthesaurus (MT) →
//! domain (DO).
//!
//! The on-disk form is a TSV with header `id\tmt\tdo\tlabel` and one row per
//! (descriptor, microthesaurus) pair. Row order matters: the first MT listed
//! for a descriptor is its primary MT, which is the one used by the direct
//! mapping. An equivalent JSON object form is also accepted:
//!
//! ```json
//! {
//!   "id_to_mt": {"1309": ["1621", "2016"]},
//!   "mt_to_do": {"1621": "16", "2016": "20"},
//!   "labels":   {"1309": {"en": "import"}}
//! }
//! ```
//!
//! The TSV `label` column holds either plain text (stored under the language
//! key `und`) or `|`-separated `xx:text` pairs keyed by two-letter language.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Language key used for TSV labels that carry no `xx:` prefix.
pub const UNDETERMINED_LANGUAGE: &str = "und";

/// Identifier of a leaf-level concept.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct DescriptorId(String);

impl DescriptorId {
    pub fn new(code: impl Into<String>) -> Result<Self> {
        let code = code.into();
        if code.is_empty() {
            return Err(Error::Invariant("descriptor id is empty".into()));
        }
        if !code.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(Error::Invariant(format!(
                "descriptor id `{code}` contains characters other than ASCII letters, digits or `_`"
            )));
        }
        Ok(Self(code))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for DescriptorId {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        Self::new(value)
    }
}

impl From<DescriptorId> for String {
    fn from(value: DescriptorId) -> Self {
        value.0
    }
}

impl fmt::Display for DescriptorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

macro_rules! fixed_width_code {
    ($name:ident, $width:expr, $what:expr) => {
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(try_from = "String", into = "String")]
        pub struct $name(String);

        impl $name {
            pub const WIDTH: usize = $width;

            pub fn new(code: impl Into<String>) -> Result<Self> {
                let code = code.into();
                if code.len() != $width || !code.chars().all(|c| c.is_ascii_alphanumeric()) {
                    return Err(Error::Invariant(format!(
                        "{} code `{code}` must be {} ASCII alphanumeric characters",
                        $what, $width
                    )));
                }
                Ok(Self(code))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl TryFrom<String> for $name {
            type Error = Error;

            fn try_from(value: String) -> Result<Self> {
                Self::new(value)
            }
        }

        impl From<$name> for String {
            fn from(value: $name) -> Self {
                value.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }
    };
}

fixed_width_code!(MtCode, 4, "microthesaurus");
fixed_width_code!(DoCode, 2, "domain");

impl MtCode {
    /// The domain implied by the numbering convention (first two characters).
    pub fn domain_prefix(&self) -> &str {
        &self.0[..DoCode::WIDTH]
    }
}

/// Granularity at which labels are expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Level {
    Id,
    Mt,
    Do,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Id, Level::Mt, Level::Do];

    /// Number of top-ranked labels conventionally evaluated at this level,
    /// matching the average label count per document (6 / 5 / 4).
    pub fn default_k(self) -> usize {
        match self {
            Level::Id => 6,
            Level::Mt => 5,
            Level::Do => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Level::Id => "ID",
            Level::Mt => "MT",
            Level::Do => "DO",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "ID" => Ok(Level::Id),
            "MT" => Ok(Level::Mt),
            "DO" => Ok(Level::Do),
            other => Err(Error::Config(format!(
                "unknown level `{other}` (expected ID, MT or DO)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierarchyCounts {
    pub n_ids: usize,
    pub n_mts: usize,
    pub n_dos: usize,
}

/// How several descriptor scores that map onto one coarser label combine.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreAggregation {
    #[default]
    Max,
    Sum,
    Mean,
}

/// Immutable descriptor hierarchy.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thesaurus {
    id_to_mt: BTreeMap<DescriptorId, Vec<MtCode>>,
    mt_to_do: BTreeMap<MtCode, DoCode>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    labels: BTreeMap<DescriptorId, BTreeMap<String, String>>,
}

impl Thesaurus {
    /// Builds a thesaurus and checks every structural invariant.
    pub fn new(
        id_to_mt: BTreeMap<DescriptorId, Vec<MtCode>>,
        mt_to_do: BTreeMap<MtCode, DoCode>,
        labels: BTreeMap<DescriptorId, BTreeMap<String, String>>,
    ) -> Result<Self> {
        let thesaurus = Self {
            id_to_mt,
            mt_to_do,
            labels,
        };
        thesaurus.check()?;
        Ok(thesaurus)
    }

    fn check(&self) -> Result<()> {
        for (id, mts) in &self.id_to_mt {
            if mts.is_empty() {
                return Err(Error::Invariant(format!(
                    "descriptor `{id}` maps to no microthesaurus"
                )));
            }
            for mt in mts {
                if !self.mt_to_do.contains_key(mt) {
                    return Err(Error::Invariant(format!(
                        "microthesaurus `{mt}` (referenced by descriptor `{id}`) has no domain"
                    )));
                }
            }
        }
        for (mt, domain) in &self.mt_to_do {
            if mt.domain_prefix() != domain.as_str() {
                return Err(Error::Invariant(format!(
                    "microthesaurus `{mt}` maps to domain `{domain}` but its prefix is `{}`",
                    mt.domain_prefix()
                )));
            }
        }
        for id in self.labels.keys() {
            if !self.id_to_mt.contains_key(id) {
                return Err(Error::Invariant(format!(
                    "label given for unknown descriptor `{id}`"
                )));
            }
        }
        Ok(())
    }

    /// Loads the TSV or JSON hierarchy form; JSON is recognised by a `.json`
    /// extension or a leading `{`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let is_json = path
            .extension()
            .is_some_and(|ext| ext.eq_ignore_ascii_case("json"))
            || text.trim_start().starts_with('{');
        if is_json {
            Self::from_json_str(&text)
        } else {
            Self::from_tsv_str(&text)
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let parsed: Thesaurus = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        parsed.check()?;
        Ok(parsed)
    }

    pub fn from_tsv_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim_end_matches('\r') == "id\tmt\tdo\tlabel" => {}
            Some((_, header)) => {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("expected header `id\\tmt\\tdo\\tlabel`, found `{header}`"),
                })
            }
            None => {
                return Err(Error::Parse {
                    line: 1,
                    message: "missing header".into(),
                })
            }
        }

        let mut id_to_mt: BTreeMap<DescriptorId, Vec<MtCode>> = BTreeMap::new();
        let mut mt_to_do: BTreeMap<MtCode, DoCode> = BTreeMap::new();
        let mut labels: BTreeMap<DescriptorId, BTreeMap<String, String>> = BTreeMap::new();

        for (index, raw) in lines {
            let line = index + 1;
            let row = raw.trim_end_matches('\r');
            if row.is_empty() {
                continue;
            }
            let fields: Vec<&str> = row.split('\t').collect();
            if fields.len() != 4 {
                return Err(Error::Parse {
                    line,
                    message: format!("expected 4 tab-separated fields, found {}", fields.len()),
                });
            }
            let at_line = |e: Error| Error::Parse {
                line,
                message: e.to_string(),
            };
            let id = DescriptorId::new(fields[0]).map_err(at_line)?;
            let mt = MtCode::new(fields[1]).map_err(at_line)?;
            let domain = DoCode::new(fields[2]).map_err(at_line)?;

            match mt_to_do.get(&mt) {
                Some(existing) if *existing != domain => {
                    return Err(Error::Parse {
                        line,
                        message: format!(
                            "microthesaurus `{mt}` already mapped to domain `{existing}`, not `{domain}`"
                        ),
                    })
                }
                Some(_) => {}
                None => {
                    mt_to_do.insert(mt.clone(), domain);
                }
            }

            let mts = id_to_mt.entry(id.clone()).or_default();
            if mts.contains(&mt) {
                return Err(Error::Parse {
                    line,
                    message: format!(
                        "duplicate row for descriptor `{id}` and microthesaurus `{mt}`"
                    ),
                });
            }
            mts.push(mt);

            let label = fields[3];
            if !label.is_empty() {
                let entry = labels.entry(id).or_default();
                for (lang, text) in parse_label_field(label) {
                    entry.insert(lang, text);
                }
            }
        }

        Self::new(id_to_mt, mt_to_do, labels)
    }

    /// Serialises to the TSV form. Labels are written as `xx:text` pairs and
    /// only on the primary row of each descriptor.
    pub fn to_tsv_string(&self) -> String {
        let mut out = String::from("id\tmt\tdo\tlabel\n");
        for (id, mts) in &self.id_to_mt {
            for (i, mt) in mts.iter().enumerate() {
                let label = if i == 0 {
                    self.labels
                        .get(id)
                        .map(|by_lang| match by_lang.get(UNDETERMINED_LANGUAGE) {
                            Some(plain) if by_lang.len() == 1 => plain.clone(),
                            _ => by_lang
                                .iter()
                                .map(|(lang, text)| format!("{lang}:{text}"))
                                .collect::<Vec<_>>()
                                .join("|"),
                        })
                        .unwrap_or_default()
                } else {
                    String::new()
                };
                out.push_str(&format!("{id}\t{mt}\t{}\t{label}\n", self.mt_to_do[mt]));
            }
        }
        out
    }

    pub fn contains(&self, id: &DescriptorId) -> bool {
        self.id_to_mt.contains_key(id)
    }

    pub fn descriptors(&self) -> impl Iterator<Item = &DescriptorId> {
        self.id_to_mt.keys()
    }

    pub fn microthesauri(&self) -> impl Iterator<Item = &MtCode> {
        self.mt_to_do.keys()
    }

    pub fn domains(&self) -> BTreeSet<&DoCode> {
        self.mt_to_do.values().collect()
    }

    /// All microthesauri of a descriptor, primary first.
    pub fn mts_of(&self, id: &DescriptorId) -> Result<&[MtCode]> {
        self.id_to_mt
            .get(id)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownDescriptor(id.to_string()))
    }

    pub fn primary_mt(&self, id: &DescriptorId) -> Result<&MtCode> {
        Ok(&self.mts_of(id)?[0])
    }

    pub fn domain_of(&self, mt: &MtCode) -> &DoCode {
        &self.mt_to_do[mt]
    }

    pub fn label(&self, id: &DescriptorId, language: &str) -> Option<&str> {
        let by_lang = self.labels.get(id)?;
        by_lang
            .get(language)
            .or_else(|| by_lang.get(UNDETERMINED_LANGUAGE))
            .map(String::as_str)
    }

    /// Direct mapping of descriptors onto their primary microthesauri.
    pub fn map_ids_to_mt<'a, I>(&self, ids: I) -> Result<BTreeSet<MtCode>>
    where
        I: IntoIterator<Item = &'a DescriptorId>,
    {
        ids.into_iter()
            .map(|id| self.primary_mt(id).cloned())
            .collect()
    }

    /// Direct mapping of descriptors onto domains, through the primary MT.
    pub fn map_ids_to_do<'a, I>(&self, ids: I) -> Result<BTreeSet<DoCode>>
    where
        I: IntoIterator<Item = &'a DescriptorId>,
    {
        ids.into_iter()
            .map(|id| Ok(self.domain_of(self.primary_mt(id)?).clone()))
            .collect()
    }

    /// Code of `id` at `level`, as a plain string.
    pub fn code_at(&self, id: &DescriptorId, level: Level) -> Result<&str> {
        Ok(match level {
            Level::Id => self
                .id_to_mt
                .get_key_value(id)
                .ok_or_else(|| Error::UnknownDescriptor(id.to_string()))?
                .0
                .as_str(),
            Level::Mt => self.primary_mt(id)?.as_str(),
            Level::Do => self.domain_of(self.primary_mt(id)?).as_str(),
        })
    }

    /// Level-generic form of the direct mapping, returning plain codes.
    pub fn project<'a, I>(&self, ids: I, level: Level) -> Result<BTreeSet<String>>
    where
        I: IntoIterator<Item = &'a DescriptorId>,
    {
        ids.into_iter()
            .map(|id| self.code_at(id, level).map(str::to_owned))
            .collect()
    }

    /// Every code that exists at `level`.
    pub fn codes_at(&self, level: Level) -> BTreeSet<String> {
        match level {
            Level::Id => self.id_to_mt.keys().map(|id| id.0.clone()).collect(),
            Level::Mt => self.mt_to_do.keys().map(|mt| mt.0.clone()).collect(),
            Level::Do => self.mt_to_do.values().map(|d| d.0.clone()).collect(),
        }
    }

    pub fn validate_counts(&self) -> HierarchyCounts {
        HierarchyCounts {
            n_ids: self.id_to_mt.len(),
            n_mts: self.mt_to_do.len(),
            n_dos: self.domains().len(),
        }
    }

    /// Re-expresses descriptor scores at `level`, combining descriptors that
    /// share a coarser label with `aggregation`. The result is ranked by
    /// descending score with ties broken by ascending code.
    pub fn map_level_scores<T: Scalar>(
        &self,
        id_scores: &[(DescriptorId, T)],
        level: Level,
        aggregation: ScoreAggregation,
    ) -> Result<Vec<(String, T)>> {
        let mut groups: BTreeMap<&str, (T, usize)> = BTreeMap::new();
        for (id, score) in id_scores {
            let code = self.code_at(id, level)?;
            groups
                .entry(code)
                .and_modify(|(acc, count)| {
                    *acc = match aggregation {
                        ScoreAggregation::Max => acc.max(*score),
                        ScoreAggregation::Sum | ScoreAggregation::Mean => *acc + *score,
                    };
                    *count += 1;
                })
                .or_insert((*score, 1));
        }
        let mut ranked: Vec<(String, T)> = groups
            .into_iter()
            .map(|(code, (acc, count))| {
                let score = match aggregation {
                    ScoreAggregation::Mean => acc / T::from_count(count),
                    _ => acc,
                };
                (code.to_owned(), score)
            })
            .collect();
        sort_ranked(&mut ranked);
        Ok(ranked)
    }
}

/// Orders `(code, score)` pairs by descending score, then ascending code.
pub(crate) fn sort_ranked<K: Ord, T: Scalar>(ranked: &mut [(K, T)]) {
    ranked.sort_by(|(ka, sa), (kb, sb)| {
        sb.partial_cmp(sa)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| ka.cmp(kb))
    });
}

fn parse_label_field(field: &str) -> Vec<(String, String)> {
    let is_lang_pair = |part: &str| {
        let bytes = part.as_bytes();
        bytes.len() >= 3 && bytes[2] == b':' && bytes[..2].iter().all(u8::is_ascii_lowercase)
    };
    let parts: Vec<&str> = field.split('|').collect();
    if parts.iter().all(|p| is_lang_pair(p)) {
        parts
            .into_iter()
            .map(|p| (p[..2].to_owned(), p[3..].to_owned()))
            .collect()
    } else {
        vec![(UNDETERMINED_LANGUAGE.to_owned(), field.to_owned())]
    }
}
