//! Commonsense priors from cloze prompts: object sizes, body-object contact
//! pairs, label normalization and user-study vote classes.

use alloc::borrow::ToOwned;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};

pub const SIZE_TEMPLATE: &str = include_str!("../assets/size_prompt.txt");
pub const CONTACT_TEMPLATE: &str = include_str!("../assets/contact_prompt.txt");
pub const SIZE_TEMPLATE_ID: &str = "object-size";
pub const CONTACT_TEMPLATE_ID: &str = "body-object-contact";
pub const LABEL_TEMPLATE_ID: &str = "part-label";

/// Accepted object sizes in meters.
pub const SIZE_SANITY_BAND: (f64, f64) = (0.01, 10.0);

/// A text-completion backend (live service, replay cache, or a test stub).
pub trait CompletionClient {
    fn model_id(&self) -> &str;
    fn complete(&self, template_id: &str, prompt: &str) -> Result<String>;
}

pub fn render_size_prompt(category: &str) -> String {
    SIZE_TEMPLATE.replace("OBJECT", category)
}

pub fn render_contact_prompt(action: &str, category: &str) -> String {
    CONTACT_TEMPLATE.replace("ACTION", action).replace("OBJECT", category)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizePrior {
    pub category: String,
    pub size: f64,
}

impl SizePrior {
    pub fn new(category: &str, size: f64) -> Result<Self> {
        if !(size >= SIZE_SANITY_BAND.0 && size <= SIZE_SANITY_BAND.1) {
            return Err(Error::Sanity(size));
        }
        Ok(SizePrior { category: category.to_owned(), size })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionMap {
    pub action: String,
    pub object_category: String,
    /// `(object part, body part)`, in response order without duplicates.
    pub pairs: Vec<(String, String)>,
}

impl InteractionMap {
    pub fn new(action: &str, object_category: &str, pairs: Vec<(String, String)>) -> Self {
        let mut unique: Vec<(String, String)> = Vec::with_capacity(pairs.len());
        for p in pairs {
            if !unique.contains(&p) {
                unique.push(p);
            }
        }
        InteractionMap { action: action.to_owned(), object_category: object_category.to_owned(), pairs: unique }
    }
}

const UNITS: [&str; 5] = ["meters", "metres", "meter", "metre", "m"];

/// First `<decimal>[whitespace]<m|meter(s)|metre(s)>` in the text. Units must
/// end at a word boundary, so `cm`, `mm` and `miles` never match.
pub fn parse_size(raw: &str) -> Result<f64> {
    let b = raw.as_bytes();
    let mut i = 0;
    while i < b.len() {
        if !b[i].is_ascii_digit() || (i > 0 && (b[i - 1].is_ascii_digit() || b[i - 1] == b'.')) {
            i += 1;
            continue;
        }
        let start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i + 1 < b.len() && b[i] == b'.' && b[i + 1].is_ascii_digit() {
            i += 1;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
        }
        let number = &raw[start..i];
        let mut j = i;
        while j < b.len() && b[j].is_ascii_whitespace() {
            j += 1;
        }
        let rest = &raw[j..];
        for unit in UNITS {
            if rest.starts_with(unit) && !rest[unit.len()..].starts_with(|c: char| c.is_alphanumeric()) {
                return number.parse().map_err(|_| Error::Parse { raw: raw.to_owned() });
            }
        }
    }
    Err(Error::Parse { raw: raw.to_owned() })
}

/// Object part / body part tokens from a contact completion. Reading stops
/// at a blank line or at the start of another few-shot block.
pub fn parse_contacts(raw: &str) -> Result<Vec<(String, String)>> {
    let mut body = String::new();
    for (n, line) in raw.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            if body.trim().is_empty() {
                continue;
            }
            break;
        }
        if t.starts_with("Action:") || t.starts_with("Object:") {
            break;
        }
        let t = if n == 0 { t.strip_prefix("Contacts:").unwrap_or(t) } else { t };
        body.push_str(t);
        body.push(',');
    }
    let mut pairs = Vec::new();
    for token in body.split(',') {
        let mut halves = token.split('/');
        if let (Some(o), Some(h), None) = (halves.next(), halves.next(), halves.next()) {
            let (o, h) = (o.trim(), h.trim());
            if !o.is_empty() && !h.is_empty() {
                pairs.push((o.to_owned(), h.to_owned()));
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::Parse { raw: raw.to_owned() });
    }
    Ok(pairs)
}

/// Metric size of a category, sanity-checked.
pub fn query_object_size(category: &str, client: &dyn CompletionClient) -> Result<SizePrior> {
    if category.trim().is_empty() {
        return Err(invalid("empty object category"));
    }
    let raw = client.complete(SIZE_TEMPLATE_ID, &render_size_prompt(category))?;
    SizePrior::new(category, parse_size(&raw)?)
}

/// Raw contact pairs for an action on a category, before label
/// normalization.
pub fn query_contacts(action: &str, category: &str, client: &dyn CompletionClient) -> Result<InteractionMap> {
    if action.trim().is_empty() || category.trim().is_empty() {
        return Err(invalid("empty action or object category"));
    }
    let raw = client.complete(CONTACT_TEMPLATE_ID, &render_contact_prompt(action, category))?;
    Ok(InteractionMap::new(action, category, parse_contacts(&raw)?))
}

/// Free-text part names mapped to one or more vocabulary labels.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SynonymTable {
    pub object: Vec<(String, Vec<String>)>,
    pub body: Vec<(String, Vec<String>)>,
}

impl SynonymTable {
    /// Everyday body words mapped to the 24 body-part labels.
    pub fn builtin() -> Self {
        let body: &[(&str, &[&str])] = &[
            ("butt", &["hips"]),
            ("bottom", &["hips"]),
            ("waist", &["hips"]),
            ("pelvis", &["hips"]),
            ("back", &["spine"]),
            ("lower back", &["spine"]),
            ("upper back", &["spine2"]),
            ("body", &["spine", "spine1", "spine2"]),
            ("torso", &["spine", "spine1", "spine2"]),
            ("chest", &["spine2"]),
            ("hand", &["leftHand", "rightHand"]),
            ("hands", &["leftHand", "rightHand"]),
            ("foot", &["leftFoot", "rightFoot"]),
            ("feet", &["leftFoot", "rightFoot"]),
            ("left leg", &["leftUpLeg"]),
            ("right leg", &["rightUpLeg"]),
            ("legs", &["leftUpLeg", "rightUpLeg"]),
            ("thighs", &["leftUpLeg", "rightUpLeg"]),
            ("knees", &["leftLeg", "rightLeg"]),
            ("shoulder", &["leftShoulder", "rightShoulder"]),
            ("shoulders", &["leftShoulder", "rightShoulder"]),
            ("arms", &["leftArm", "rightArm"]),
            ("mouth", &["head"]),
            ("face", &["head"]),
        ];
        let own = |t: &[(&str, &[&str])]| {
            t.iter().map(|(k, v)| (k.to_string(), v.iter().map(|s| s.to_string()).collect())).collect()
        };
        SynonymTable { object: Vec::new(), body: own(body) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DroppedPair {
    pub object_part: String,
    pub body_part: String,
    pub reason: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Normalized {
    pub map: InteractionMap,
    pub dropped: Vec<DroppedPair>,
}

fn exact<'a>(term: &str, vocab: &'a [String]) -> Option<&'a String> {
    vocab.iter().find(|v| v.as_str() == term).or_else(|| vocab.iter().find(|v| v.eq_ignore_ascii_case(term)))
}

fn render_label_prompt(term: &str, vocab: &[String]) -> String {
    alloc::format!("This is a part name matcher.\nLabels: {}\nPart: {term}\nLabel:", vocab.join(", "))
}

fn resolve(
    term: &str,
    category: Option<&str>,
    vocab: &[String],
    synonyms: &[(String, Vec<String>)],
    fallback: Option<&dyn CompletionClient>,
) -> Result<Vec<String>> {
    let term = term.trim();
    if let Some(v) = exact(term, vocab) {
        return Ok(alloc::vec![v.clone()]);
    }
    if let Some(c) = category {
        if let Some(v) = exact(&alloc::format!("{c} {term}"), vocab) {
            return Ok(alloc::vec![v.clone()]);
        }
    }
    if let Some((_, targets)) = synonyms.iter().find(|(k, _)| k.eq_ignore_ascii_case(term)) {
        let hits: Vec<String> = targets.iter().filter_map(|t| exact(t, vocab).cloned()).collect();
        if !hits.is_empty() {
            return Ok(hits);
        }
    }
    if let Some(client) = fallback {
        let raw = client.complete(LABEL_TEMPLATE_ID, &render_label_prompt(term, vocab))?;
        if let Some(v) = raw.lines().map(str::trim).find(|l| !l.is_empty()).and_then(|l| exact(l, vocab)) {
            return Ok(alloc::vec![v.clone()]);
        }
    }
    Ok(Vec::new())
}

/// Maps every part name to vocabulary labels: exact match, then
/// `"{category} {name}"` for object parts, then the synonym table, then the
/// optional fallback prompt. Pairs that stay unmapped are dropped with the
/// reason `unmapped`.
pub fn normalize_part_labels(
    map: &InteractionMap,
    object_vocab: &[String],
    body_vocab: &[String],
    synonyms: &SynonymTable,
    fallback: Option<&dyn CompletionClient>,
) -> Result<Normalized> {
    if object_vocab.is_empty() || body_vocab.is_empty() {
        return Err(invalid("empty part vocabulary"));
    }
    let mut pairs = Vec::new();
    let mut dropped = Vec::new();
    for (o, h) in &map.pairs {
        let objs = resolve(o, Some(&map.object_category), object_vocab, &synonyms.object, fallback)?;
        let bodies = resolve(h, None, body_vocab, &synonyms.body, fallback)?;
        if objs.is_empty() || bodies.is_empty() {
            dropped.push(DroppedPair { object_part: o.clone(), body_part: h.clone(), reason: "unmapped" });
            continue;
        }
        for a in &objs {
            for b in &bodies {
                pairs.push((a.clone(), b.clone()));
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::NormalizationFailure);
    }
    Ok(Normalized { map: InteractionMap::new(&map.action, &map.object_category, pairs), dropped })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VoteClass {
    Correct,
    Uncertain,
    Incorrect,
}

/// Class of a label from its yes-votes out of ten raters.
pub fn classify_votes(votes: i64) -> Result<VoteClass> {
    match votes {
        7..=10 => Ok(VoteClass::Correct),
        4..=6 => Ok(VoteClass::Uncertain),
        0..=3 => Ok(VoteClass::Incorrect),
        _ => Err(invalid(alloc::format!("{votes} votes is outside 0..=10"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::SMPL_PARTS;
    use core::cell::RefCell;
    use proptest::prelude::*;

    struct Canned {
        reply: String,
        prompts: RefCell<Vec<String>>,
    }

    impl Canned {
        fn new(reply: &str) -> Self {
            Canned { reply: reply.into(), prompts: RefCell::new(Vec::new()) }
        }
    }

    impl CompletionClient for Canned {
        fn model_id(&self) -> &str {
            "canned"
        }
        fn complete(&self, _: &str, prompt: &str) -> Result<String> {
            self.prompts.borrow_mut().push(prompt.into());
            Ok(self.reply.clone())
        }
    }

    fn body_vocab() -> Vec<String> {
        SMPL_PARTS.iter().map(|s| s.to_string()).collect()
    }

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn size_prompt_is_rendered_verbatim() {
        let c = Canned::new(" 0.85m");
        let p = query_object_size("chair", &c).unwrap();
        assert_eq!(p.size, 0.85);
        assert_eq!(
            c.prompts.borrow()[0],
            "This is an object length estimator.\nLength of a bike: 1.75m\nHeight of a woman: 1.63m\nLength of a chair:"
        );
    }

    #[test]
    fn contact_prompt_is_rendered_verbatim() {
        let c = Canned::new(" seat/butt, back/back\n\nAction: stand");
        let m = query_contacts("sit", "chair", &c).unwrap();
        assert_eq!(m.pairs, [("seat".into(), "butt".into()), ("back".into(), "back".into())]);
        let prompt = c.prompts.borrow()[0].clone();
        assert!(prompt.starts_with("This is a body-object contact generator.\n\nAction: ride\nObject: bike\n"));
        assert!(prompt.contains("Contacts: handlebar/hands, seat/butt, \n          paddle/foot\n\nAction: walk \n"));
        assert!(prompt.ends_with("Contacts: soccer/hands\n\nAction: sit\nObject: chair\nContacts:"));
        assert_eq!(prompt.matches("Action:").count(), 7);
    }

    #[test]
    fn size_parser_cases() {
        assert_eq!(parse_size("about 0.75 m tall").unwrap(), 0.75);
        assert_eq!(parse_size("2 meters").unwrap(), 2.0);
        assert_eq!(parse_size("75 cm, or 0.75m").unwrap(), 0.75);
        assert_eq!(parse_size("3 metres long").unwrap(), 3.0);
        assert!(matches!(parse_size("5mm"), Err(Error::Parse { .. })));
        assert!(matches!(parse_size("two miles"), Err(Error::Parse { .. })));
        assert!(matches!(parse_size("a few feet"), Err(Error::Parse { raw }) if raw == "a few feet"));
    }

    #[test]
    fn sanity_band() {
        assert!(matches!(query_object_size("x", &Canned::new("12 m")), Err(Error::Sanity(s)) if s == 12.0));
        assert!(matches!(query_object_size("x", &Canned::new("0.001 m")), Err(Error::Sanity(_))));
        assert!(query_object_size("x", &Canned::new("10 m")).is_ok());
        assert!(query_object_size("", &Canned::new("1 m")).is_err());
    }

    #[test]
    fn contact_parser_cases() {
        let p = parse_contacts("Contacts: handlebar/hands, seat/butt, \n          paddle/foot\n").unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p[2], ("paddle".into(), "foot".into()));
        assert!(matches!(parse_contacts("no idea"), Err(Error::Parse { .. })));
        assert!(parse_contacts("\n\nchair seat/butt\nObject: x\nfoo/bar").unwrap().len() == 1);
    }

    #[test]
    fn normalization_examples() {
        let objects = strings(&["chair seat", "chair back", "chair base"]);
        let m = InteractionMap::new(
            "sit",
            "chair",
            alloc::vec![
                ("chair seat".into(), "butt".into()),
                ("back".into(), "back".into()),
                ("florb".into(), "hands".into()),
            ],
        );
        let n = normalize_part_labels(&m, &objects, &body_vocab(), &SynonymTable::builtin(), None).unwrap();
        assert_eq!(n.map.pairs, [("chair seat".into(), "hips".into()), ("chair back".into(), "spine".into())]);
        assert_eq!(n.dropped, [DroppedPair { object_part: "florb".into(), body_part: "hands".into(), reason: "unmapped" }]);
        let hands = InteractionMap::new("carry", "chair", alloc::vec![("chair back".into(), "hands".into())]);
        let n = normalize_part_labels(&hands, &objects, &body_vocab(), &SynonymTable::builtin(), None).unwrap();
        assert_eq!(n.map.pairs.len(), 2);
        let none = InteractionMap::new("x", "chair", alloc::vec![("florb".into(), "glorp".into())]);
        assert_eq!(
            normalize_part_labels(&none, &objects, &body_vocab(), &SynonymTable::builtin(), None),
            Err(Error::NormalizationFailure)
        );
    }

    #[test]
    fn fallback_prompt_is_used_last() {
        let objects = strings(&["chair seat"]);
        let m = InteractionMap::new("sit", "chair", alloc::vec![("cushion".into(), "rump".into())]);
        let c = Canned::new(" chair seat\n");
        // Body side also goes to the fallback and gets "chair seat", which is not a body label.
        assert!(normalize_part_labels(&m, &objects, &body_vocab(), &SynonymTable::default(), Some(&c)).is_err());
        assert_eq!(c.prompts.borrow().len(), 2);
        let c = Canned::new("hips");
        let m = InteractionMap::new("sit", "chair", alloc::vec![("seat".into(), "rump".into())]);
        let n = normalize_part_labels(&m, &objects, &body_vocab(), &SynonymTable::default(), Some(&c)).unwrap();
        assert_eq!(n.map.pairs, [("chair seat".into(), "hips".into())]);
        assert_eq!(c.prompts.borrow().len(), 1);
    }

    #[test]
    fn vote_thresholds() {
        for v in 0..=10 {
            let expected = if v > 6 {
                VoteClass::Correct
            } else if v >= 4 {
                VoteClass::Uncertain
            } else {
                VoteClass::Incorrect
            };
            assert_eq!(classify_votes(v).unwrap(), expected);
        }
        assert!(classify_votes(-1).is_err() && classify_votes(11).is_err());
    }

    proptest! {
        #[test]
        fn size_parser_matches_regex(
            prefix in "[a-z ]{0,8}",
            whole in 0u32..100,
            frac in 0u32..1000,
            gap in " {0,2}",
            unit in prop::sample::select(alloc::vec!["m", "meter", "meters", "metre", "metres", "cm", "mm", "ft"]),
            suffix in "( [a-z]{0,6})?",
        ) {
            let text = alloc::format!("{prefix}{whole}.{frac}{gap}{unit}{suffix}");
            let re = regex::Regex::new(r"(\d+(?:\.\d+)?)\s*(?:meters|metres|meter|metre|m)\b").unwrap();
            let expected = re.captures(&text).map(|c| c[1].parse::<f64>().unwrap());
            prop_assert_eq!(parse_size(&text).ok(), expected);
        }

        #[test]
        fn normalization_is_idempotent(picks in prop::collection::vec((0usize..6, 0usize..30), 1..8)) {
            let objects = strings(&["chair seat", "chair back", "chair base"]);
            let obj_words = ["seat", "chair back", "back", "base", "florb", "chair seat"];
            let mut body_words: Vec<String> = body_vocab();
            body_words.extend(strings(&["butt", "hands", "feet", "back", "glorp", "mouth"]));
            let pairs = picks.iter().map(|&(o, h)| (obj_words[o].to_string(), body_words[h].clone())).collect();
            let m = InteractionMap::new("sit", "chair", pairs);
            let table = SynonymTable::builtin();
            if let Ok(once) = normalize_part_labels(&m, &objects, &body_vocab(), &table, None) {
                let twice = normalize_part_labels(&once.map, &objects, &body_vocab(), &table, None).unwrap();
                prop_assert_eq!(&twice.map, &once.map);
                prop_assert!(twice.dropped.is_empty());
            }
        }
    }
}
