use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::SentimentError;

/// Lexicon shipped with the crate: token, mean valence, standard deviation, raw ratings.
pub const BUNDLED_LEXICON: &str = include_str!("../../data/vader_lexicon.txt");

const BOOSTER_INCREMENT: f64 = 0.293;
const DAMPENER_INCREMENT: f64 = -0.293;

const BOOSTERS: &[&str] = &[
    "absolutely", "amazingly", "awfully", "completely", "considerable", "considerably",
    "decidedly", "deeply", "effing", "enormous", "enormously", "entirely", "especially",
    "exceptional", "exceptionally", "extreme", "extremely", "fabulously", "flipping", "flippin",
    "frackin", "fracking", "fricking", "frickin", "frigging", "friggin", "fully", "fuckin",
    "fucking", "fuggin", "fugging", "greatly", "hella", "highly", "hugely", "incredible",
    "incredibly", "intensely", "major", "majorly", "more", "most", "particularly", "purely",
    "quite", "really", "remarkably", "so", "substantially", "thoroughly", "total", "totally",
    "tremendous", "tremendously", "uber", "unbelievably", "unusually", "utter", "utterly", "very",
];

const DAMPENERS: &[&str] = &[
    "almost", "barely", "hardly", "just enough", "kind of", "kinda", "kindof", "kind-of", "less",
    "little", "marginal", "marginally", "occasional", "occasionally", "partly", "scarce",
    "scarcely", "slight", "slightly", "somewhat", "sort of", "sorta", "sortof", "sort-of",
];

const NEGATIONS: &[&str] = &[
    "aint", "arent", "cannot", "cant", "couldnt", "darent", "didnt", "doesnt", "ain't", "aren't",
    "can't", "couldn't", "daren't", "didn't", "doesn't", "dont", "hadnt", "hasnt", "havent",
    "isnt", "mightnt", "mustnt", "neither", "don't", "hadn't", "hasn't", "haven't", "isn't",
    "mightn't", "mustn't", "neednt", "needn't", "never", "none", "nope", "nor", "not", "nothing",
    "nowhere", "oughtnt", "shant", "shouldnt", "uhuh", "wasnt", "werent", "oughtn't", "shan't",
    "shouldn't", "uh-uh", "wasn't", "weren't", "without", "wont", "wouldnt", "won't", "wouldn't",
    "rarely", "seldom", "despite",
];

/// Token valences plus the modifier vocabularies the rule scorer consults.
///
/// Tokens are stored lowercase. Boosters and negations default to the standard
/// English sets and are independent of the valence file.
#[derive(Debug, Clone)]
pub struct Lexicon {
    entries: HashMap<String, f64>,
    boosters: HashMap<String, f64>,
    negations: HashSet<String>,
}

impl Default for Lexicon {
    fn default() -> Self {
        Lexicon {
            entries: HashMap::new(),
            boosters: BOOSTERS
                .iter()
                .map(|t| (t.to_string(), BOOSTER_INCREMENT))
                .chain(DAMPENERS.iter().map(|t| (t.to_string(), DAMPENER_INCREMENT)))
                .collect(),
            negations: NEGATIONS.iter().map(|t| t.to_string()).collect(),
        }
    }
}

impl Lexicon {
    /// Empty valence table with the standard modifiers.
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bundled() -> Self {
        Self::from_reader(BUNDLED_LEXICON.as_bytes()).expect("bundled lexicon parses")
    }

    /// Tab-separated `token<TAB>valence[<TAB>...]`; extra columns are ignored,
    /// blank lines skipped, and a repeated token overrides the earlier row.
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, SentimentError> {
        let mut lexicon = Lexicon::new();
        for (idx, line) in reader.lines().enumerate() {
            let row = idx + 1;
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let mut cols = line.split('\t');
            let token = cols.next().unwrap_or_default();
            let valence = cols
                .next()
                .ok_or_else(|| SentimentError::LexiconRow {
                    row,
                    message: "missing valence column".into(),
                })?
                .trim();
            let valence: f64 = valence.parse().map_err(|_| SentimentError::LexiconRow {
                row,
                message: format!("non-numeric valence {valence:?}"),
            })?;
            if !valence.is_finite() {
                return Err(SentimentError::LexiconRow {
                    row,
                    message: format!("non-finite valence {valence}"),
                });
            }
            let token = token.to_lowercase();
            if lexicon.entries.insert(token.clone(), valence).is_some() {
                log::debug!("lexicon row {row}: duplicate token {token:?}, keeping the later value");
            }
        }
        Ok(lexicon)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SentimentError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| SentimentError::LexiconFile {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_reader(BufReader::new(file))
    }

    pub fn insert(&mut self, token: &str, valence: f64) {
        self.entries.insert(token.to_lowercase(), valence);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Lookup by an already-lowercased token.
    pub fn valence(&self, token: &str) -> Option<f64> {
        self.entries.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.entries.contains_key(token)
    }

    pub fn booster(&self, token: &str) -> Option<f64> {
        self.boosters.get(token).copied()
    }

    pub fn is_negation(&self, token: &str) -> bool {
        self.negations.contains(token)
    }
}

/// `load_lexicon` under its operational name.
pub fn load_lexicon(path: impl AsRef<Path>) -> Result<Lexicon, SentimentError> {
    Lexicon::load(path)
}
