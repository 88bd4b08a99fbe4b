//! Line-delimited JSON ingestion of the concept taxonomy and of publication
//! records, with ancestor propagation of field tags.
//!
//! Minimal concept schema (one object per line; lines starting with `#` are
//! metadata):
//!
//! ```text
//! {"id": "C1", "display_name": "Art", "level": 0,
//!  "ancestors": ["C0"] | [{"id": "C0", "display_name": "..."}],
//!  "related_concepts": ["text"] | [{"display_name": "text"}],
//!  "description": "..." | null}
//! ```
//!
//! Minimal work schema:
//!
//! ```text
//! {"id": "W1", "publication_year": 2010, "concepts": ["C1"] | [{"id": "C1"}]}
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::{BufRead, Write};

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::types::{Year, YearRange};

/// Maximum number of warning messages retained in a report; counters are exact.
const MAX_WARNINGS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConceptRecord {
    pub field_id: String,
    pub display_name: String,
    pub level: u32,
    /// Ancestors that resolve within the owning catalog.
    pub ancestor_ids: Vec<String>,
    /// Display names of every listed ancestor, resolved against the taxonomy
    /// the record was parsed from. Survives domain filtering.
    pub ancestor_names: Vec<String>,
    pub related_texts: Vec<String>,
    pub description: Option<String>,
}

/// Immutable field taxonomy.
#[derive(Debug, Clone)]
pub struct ConceptCatalog {
    records: BTreeMap<String, ConceptRecord>,
    root_ids: Vec<String>,
    /// Transitive ancestors of each record (excluding itself), sorted.
    closure: HashMap<String, Vec<String>>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Malformed lines become hard errors instead of counted warnings.
    pub strict: bool,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ConceptParseReport {
    /// Non-blank input lines.
    pub lines: usize,
    pub parsed: usize,
    pub skipped: usize,
    pub dangling_ancestors: usize,
    pub level_inconsistent: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct WorkParseReport {
    pub lines: usize,
    pub parsed: usize,
    pub malformed: usize,
    pub bad_year: usize,
    pub out_of_horizon: usize,
    pub empty_after_filter: usize,
    pub warnings: Vec<String>,
}

impl WorkParseReport {
    pub fn skipped(&self) -> usize {
        self.malformed + self.bad_year + self.out_of_horizon + self.empty_after_filter
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkRecord {
    pub work_id: String,
    pub year: Year,
    /// Ancestor-closed, catalog-restricted, sorted field ids.
    pub field_ids: Vec<String>,
}

fn push_warning(warnings: &mut Vec<String>, msg: String) {
    log::warn!("{msg}");
    if warnings.len() < MAX_WARNINGS {
        warnings.push(msg);
    }
}

fn string_field<'a>(obj: &'a serde_json::Map<String, Value>, key: &str) -> Option<&'a str> {
    obj.get(key).and_then(Value::as_str)
}

/// Entries of an array that are either plain strings or objects carrying `key`.
fn string_list(value: Option<&Value>, key: &str) -> std::result::Result<Vec<String>, String> {
    match value {
        None | Some(Value::Null) => Ok(Vec::new()),
        Some(Value::Array(items)) => items
            .iter()
            .map(|item| match item {
                Value::String(s) => Ok(s.clone()),
                Value::Object(o) => string_field(o, key)
                    .map(str::to_string)
                    .ok_or_else(|| format!("list entry without `{key}`")),
                _ => Err("list entry is neither string nor object".to_string()),
            })
            .collect(),
        Some(_) => Err("expected an array".to_string()),
    }
}

struct RawConcept {
    record: ConceptRecord,
    /// Names given inline by the source (object-form ancestors), by id.
    inline_names: HashMap<String, String>,
    explicit_names: Option<Vec<String>>,
}

fn parse_concept_line(line: &str) -> std::result::Result<RawConcept, String> {
    let value: Value = serde_json::from_str(line).map_err(|e| format!("invalid JSON: {e}"))?;
    let obj = value.as_object().ok_or("line is not a JSON object")?;
    let field_id = string_field(obj, "id").ok_or("missing string `id`")?.to_string();
    let display_name = string_field(obj, "display_name")
        .ok_or("missing string `display_name`")?
        .to_string();
    let level = obj
        .get("level")
        .and_then(Value::as_u64)
        .ok_or("missing non-negative integer `level`")?;
    let level = u32::try_from(level).map_err(|_| "level out of range")?;

    let mut inline_names = HashMap::new();
    if let Some(Value::Array(items)) = obj.get("ancestors") {
        for item in items {
            if let (Some(id), Some(name)) = (
                item.get("id").and_then(Value::as_str),
                item.get("display_name").and_then(Value::as_str),
            ) {
                inline_names.insert(id.to_string(), name.to_string());
            }
        }
    }
    let ancestor_ids = string_list(obj.get("ancestors"), "id").map_err(|e| format!("ancestors: {e}"))?;
    let related_texts =
        string_list(obj.get("related_concepts"), "display_name").map_err(|e| format!("related_concepts: {e}"))?;
    let explicit_names = match obj.get("ancestor_names") {
        None | Some(Value::Null) => None,
        v => Some(string_list(v, "display_name").map_err(|e| format!("ancestor_names: {e}"))?),
    };
    let description = match obj.get("description") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) if s.trim().is_empty() => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return Err("`description` is not a string".to_string()),
    };

    Ok(RawConcept {
        record: ConceptRecord {
            field_id,
            display_name,
            level,
            ancestor_ids,
            ancestor_names: Vec::new(),
            related_texts,
            description,
        },
        inline_names,
        explicit_names,
    })
}

/// Parses a concept taxonomy from line-delimited JSON.
pub fn parse_concepts<R: BufRead>(
    reader: R,
    source_name: &str,
    opts: ParseOptions,
) -> Result<(ConceptCatalog, ConceptParseReport)> {
    let mut report = ConceptParseReport::default();
    let mut raws: Vec<RawConcept> = Vec::new();
    let mut seen = HashSet::new();

    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        report.lines += 1;
        match parse_concept_line(&line) {
            Ok(raw) => {
                if !seen.insert(raw.record.field_id.clone()) {
                    return Err(Error::DuplicateId(raw.record.field_id));
                }
                report.parsed += 1;
                raws.push(raw);
            }
            Err(msg) if opts.strict => return Err(Error::parse(source_name, idx + 1, msg)),
            Err(msg) => {
                report.skipped += 1;
                push_warning(
                    &mut report.warnings,
                    format!("{source_name}:{}: skipped: {msg}", idx + 1),
                );
            }
        }
    }

    let names: HashMap<&str, &str> = raws
        .iter()
        .map(|r| (r.record.field_id.as_str(), r.record.display_name.as_str()))
        .collect();

    let mut records = Vec::with_capacity(raws.len());
    for raw in &raws {
        let mut rec = raw.record.clone();
        let mut ancestor_names = Vec::new();
        let mut kept = Vec::new();
        for id in &rec.ancestor_ids {
            let resolved = names.get(id.as_str()).copied();
            if let Some(name) = resolved.or(raw.inline_names.get(id).map(String::as_str)) {
                ancestor_names.push(name.to_string());
            }
            if resolved.is_some() {
                kept.push(id.clone());
            } else {
                report.dangling_ancestors += 1;
                push_warning(
                    &mut report.warnings,
                    format!("{}: dropped unresolvable ancestor `{id}`", rec.field_id),
                );
            }
        }
        rec.ancestor_ids = kept;
        rec.ancestor_names = raw.explicit_names.clone().unwrap_or(ancestor_names);
        if (rec.level == 0) != rec.ancestor_ids.is_empty() {
            if opts.strict {
                return Err(Error::parse(
                    source_name,
                    0,
                    format!("{}: level {} inconsistent with ancestor list", rec.field_id, rec.level),
                ));
            }
            report.level_inconsistent += 1;
            push_warning(
                &mut report.warnings,
                format!(
                    "{}: level {} with {} resolvable ancestors",
                    rec.field_id,
                    rec.level,
                    rec.ancestor_ids.len()
                ),
            );
        }
        records.push(rec);
    }

    Ok((ConceptCatalog::from_records(records)?, report))
}

impl ConceptCatalog {
    /// Builds a catalog, checking id uniqueness, ancestor resolution and acyclicity.
    pub fn from_records(records: Vec<ConceptRecord>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for rec in records {
            let id = rec.field_id.clone();
            if map.insert(id.clone(), rec).is_some() {
                return Err(Error::DuplicateId(id));
            }
        }
        for rec in map.values() {
            if let Some(missing) = rec.ancestor_ids.iter().find(|a| !map.contains_key(*a)) {
                return Err(Error::UnknownField(missing.clone()));
            }
        }
        let closure = compute_closure(&map)?;
        let root_ids = map
            .values()
            .filter(|r| r.level == 0)
            .map(|r| r.field_id.clone())
            .collect();
        Ok(ConceptCatalog {
            records: map,
            root_ids,
            closure,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, field_id: &str) -> Option<&ConceptRecord> {
        self.records.get(field_id)
    }

    pub fn contains(&self, field_id: &str) -> bool {
        self.records.contains_key(field_id)
    }

    /// Records in field-id order.
    pub fn records(&self) -> impl Iterator<Item = &ConceptRecord> {
        self.records.values()
    }

    /// Field ids in sorted order; this is the canonical vertex order.
    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.records.keys().map(String::as_str)
    }

    pub fn root_ids(&self) -> &[String] {
        &self.root_ids
    }

    /// Strict transitive ancestors of `field_id` within the catalog.
    pub fn ancestors(&self, field_id: &str) -> &[String] {
        self.closure.get(field_id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_ancestor(&self, ancestor: &str, of: &str) -> bool {
        self.ancestors(of)
            .binary_search_by(|a| a.as_str().cmp(ancestor))
            .is_ok()
    }

    /// Ancestor closure of a tag set, restricted to the catalog. Tags outside
    /// the catalog are ignored.
    pub fn close_tags<'a, I>(&self, tags: I) -> Vec<String>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut out = BTreeSet::new();
        for tag in tags {
            if self.records.contains_key(tag) {
                out.insert(tag.to_string());
                out.extend(self.ancestors(tag).iter().cloned());
            }
        }
        out.into_iter().collect()
    }

    /// Writes the catalog in the same line-delimited schema `parse_concepts` reads.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for rec in self.records.values() {
            let line = serde_json::json!({
                "id": rec.field_id,
                "display_name": rec.display_name,
                "level": rec.level,
                "ancestors": rec.ancestor_ids,
                "ancestor_names": rec.ancestor_names,
                "related_concepts": rec.related_texts,
                "description": rec.description,
            });
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

fn compute_closure(map: &BTreeMap<String, ConceptRecord>) -> Result<HashMap<String, Vec<String>>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Visiting,
        Done,
    }

    fn visit(
        id: &str,
        map: &BTreeMap<String, ConceptRecord>,
        marks: &mut HashMap<String, Mark>,
        out: &mut HashMap<String, Vec<String>>,
    ) -> Result<()> {
        match marks.get(id) {
            Some(Mark::Done) => return Ok(()),
            Some(Mark::Visiting) => return Err(Error::invalid(format!("ancestor cycle through `{id}`"))),
            None => {}
        }
        marks.insert(id.to_string(), Mark::Visiting);
        let mut acc = BTreeSet::new();
        for parent in &map[id].ancestor_ids {
            visit(parent, map, marks, out)?;
            acc.insert(parent.clone());
            acc.extend(out[parent.as_str()].iter().cloned());
        }
        marks.insert(id.to_string(), Mark::Done);
        out.insert(id.to_string(), acc.into_iter().collect());
        Ok(())
    }

    let mut marks = HashMap::new();
    let mut out = HashMap::with_capacity(map.len());
    for id in map.keys() {
        visit(id, map, &mut marks, &mut out)?;
    }
    Ok(out)
}

/// Subcatalog of the given roots and every node with an ancestor path into them.
pub fn filter_domain(catalog: &ConceptCatalog, roots: &BTreeSet<String>) -> Result<ConceptCatalog> {
    for r in roots {
        if !catalog.root_ids.contains(r) {
            return Err(Error::UnknownRoot(r.clone()));
        }
    }
    let keep: BTreeSet<&str> = catalog
        .records
        .values()
        .filter(|rec| {
            roots.contains(&rec.field_id) || catalog.ancestors(&rec.field_id).iter().any(|a| roots.contains(a))
        })
        .map(|rec| rec.field_id.as_str())
        .collect();
    let records = catalog
        .records
        .values()
        .filter(|rec| keep.contains(rec.field_id.as_str()))
        .map(|rec| {
            let mut rec = rec.clone();
            rec.ancestor_ids.retain(|a| keep.contains(a.as_str()));
            rec
        })
        .collect();
    ConceptCatalog::from_records(records)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct WorkOptions {
    pub strict: bool,
    pub horizon: Option<YearRange>,
}

fn parse_year(value: Option<&Value>) -> Option<Year> {
    match value? {
        Value::Number(n) => n.as_i64().and_then(|y| Year::try_from(y).ok()),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

/// Streams works from line-delimited JSON, calling `sink` for each retained
/// record. Memory use is bounded by one line plus the catalog.
pub fn parse_works_with<R, F>(
    reader: R,
    source_name: &str,
    catalog: &ConceptCatalog,
    opts: WorkOptions,
    mut sink: F,
) -> Result<WorkParseReport>
where
    R: BufRead,
    F: FnMut(WorkRecord) -> Result<()>,
{
    let mut report = WorkParseReport::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        report.lines += 1;
        let lineno = idx + 1;

        let parsed: std::result::Result<(String, Option<Year>, Vec<String>), String> = (|| {
            let value: Value = serde_json::from_str(&line).map_err(|e| format!("invalid JSON: {e}"))?;
            let obj = value.as_object().ok_or("line is not a JSON object")?;
            let id = string_field(obj, "id").ok_or("missing string `id`")?.to_string();
            let tags = string_list(obj.get("concepts"), "id").map_err(|e| format!("concepts: {e}"))?;
            Ok((id, parse_year(obj.get("publication_year")), tags))
        })();

        let (work_id, year, tags) = match parsed {
            Ok(p) => p,
            Err(msg) if opts.strict => return Err(Error::parse(source_name, lineno, msg)),
            Err(msg) => {
                report.malformed += 1;
                push_warning(&mut report.warnings, format!("{source_name}:{lineno}: skipped: {msg}"));
                continue;
            }
        };
        let Some(year) = year else {
            if opts.strict {
                return Err(Error::parse(source_name, lineno, "unparseable publication_year"));
            }
            report.bad_year += 1;
            push_warning(
                &mut report.warnings,
                format!("{source_name}:{lineno}: unparseable year"),
            );
            continue;
        };
        if let Some(h) = opts.horizon {
            if !h.contains(year) {
                report.out_of_horizon += 1;
                continue;
            }
        }
        let field_ids = catalog.close_tags(tags.iter().map(String::as_str));
        if field_ids.is_empty() {
            report.empty_after_filter += 1;
            continue;
        }
        report.parsed += 1;
        sink(WorkRecord {
            work_id,
            year,
            field_ids,
        })?;
    }
    Ok(report)
}

/// Collecting variant of [`parse_works_with`].
pub fn parse_works<R: BufRead>(
    reader: R,
    source_name: &str,
    catalog: &ConceptCatalog,
    opts: WorkOptions,
) -> Result<(Vec<WorkRecord>, WorkParseReport)> {
    let mut works = Vec::new();
    let report = parse_works_with(reader, source_name, catalog, opts, |w| {
        works.push(w);
        Ok(())
    })?;
    Ok((works, report))
}

/// Intermediate corpus: `work_id,year,field_ids` with `;`-joined ids, input order.
pub fn write_works_csv<W: Write>(works: &[WorkRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["work_id", "year", "field_ids"])?;
    for work in works {
        out.write_record([work.work_id.as_str(), &work.year.to_string(), &work.field_ids.join(";")])?;
    }
    out.flush()?;
    Ok(())
}
