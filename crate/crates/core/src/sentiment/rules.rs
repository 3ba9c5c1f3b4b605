//! Lexicon-and-rules compound scorer for short social-media text.
//!
//! Each token's valence is adjusted for preceding negations, degree modifiers
//! and ALL-CAPS emphasis, the clause after a contrastive "but" is up-weighted,
//! and punctuation emphasis is added before normalising the sum into (-1, 1).

use super::{Lexicon, ScorerConfig};

/// Multi-word expressions whose valence replaces the head token's.
const SPECIAL_CASES: &[(&str, f64)] = &[
    ("the shit", 3.0),
    ("the bomb", 3.0),
    ("bad ass", 1.5),
    ("badass", 1.5),
    ("bus stop", 0.0),
    ("yeah right", -2.0),
    ("kiss of death", -1.5),
    ("to die for", 3.0),
    ("beating heart", 3.5),
];

const ASCII_PUNCTUATION: &[char] = &[
    '!', '"', '#', '$', '%', '&', '\'', '(', ')', '*', '+', ',', '-', '.', '/', ':', ';', '<', '=',
    '>', '?', '@', '[', '\\', ']', '^', '_', '`', '{', '|', '}', '~',
];

fn special_case(phrase: &str) -> Option<f64> {
    SPECIAL_CASES
        .iter()
        .find(|(p, _)| *p == phrase)
        .map(|(_, v)| *v)
}

/// True when the token has at least one cased character and none are lowercase.
fn is_upper(token: &str) -> bool {
    let mut cased = false;
    for c in token.chars() {
        if c.is_lowercase() {
            return false;
        }
        if c.is_uppercase() {
            cased = true;
        }
    }
    cased
}

fn is_mention_or_url(token: &str) -> bool {
    (token.starts_with('@') && token.len() > 1)
        || token.starts_with("http://")
        || token.starts_with("https://")
        || token.starts_with("www.")
}

/// Drops `@user` handles and links, which carry no valence.
pub fn strip_mentions_and_urls(text: &str) -> String {
    text.split_whitespace()
        .filter(|t| !is_mention_or_url(t))
        .collect::<Vec<_>>()
        .join(" ")
}

struct Token<'a> {
    raw: &'a str,
    lower: String,
}

fn tokenize(text: &str) -> Vec<Token<'_>> {
    text.split_whitespace()
        .map(|word| {
            // short tokens such as ":)" or ":-(" are emoticons; keep their punctuation
            let stripped = word.trim_matches(ASCII_PUNCTUATION);
            let raw = if stripped.chars().count() <= 2 { word } else { stripped };
            Token {
                raw,
                lower: raw.to_lowercase(),
            }
        })
        .collect()
}

struct Sentence<'a, 'l> {
    tokens: Vec<Token<'a>>,
    cap_differential: bool,
    lexicon: &'l Lexicon,
    config: &'l ScorerConfig,
}

impl<'a, 'l> Sentence<'a, 'l> {
    fn lower(&self, i: usize) -> &str {
        &self.tokens[i].lower
    }

    fn in_lexicon(&self, i: usize) -> bool {
        self.lexicon.contains(self.lower(i))
    }

    fn negated(&self, i: usize) -> bool {
        let w = self.lower(i);
        self.lexicon.is_negation(w) || w.contains("n't")
    }

    fn modifier_scalar(&self, j: usize, valence: f64) -> f64 {
        let Some(mut scalar) = self.lexicon.booster(self.lower(j)) else {
            return 0.0;
        };
        if valence < 0.0 {
            scalar = -scalar;
        }
        if is_upper(self.tokens[j].raw) && self.cap_differential {
            if valence > 0.0 {
                scalar += self.config.caps_increment;
            } else {
                scalar -= self.config.caps_increment;
            }
        }
        scalar
    }

    fn negation_check(&self, mut valence: f64, distance: usize, i: usize) -> f64 {
        let so_or_this = |w: &str| w == "so" || w == "this";
        match distance {
            0 => {
                if self.negated(i - 1) {
                    valence *= self.config.negation_scalar;
                }
            }
            1 => {
                if self.lower(i - 2) == "never" && so_or_this(self.lower(i - 1)) {
                    valence *= 1.25;
                } else if self.lower(i - 2) == "without" && self.lower(i - 1) == "doubt" {
                } else if self.negated(i - 2) {
                    valence *= self.config.negation_scalar;
                }
            }
            _ => {
                if (self.lower(i - 3) == "never" && so_or_this(self.lower(i - 2)))
                    || so_or_this(self.lower(i - 1))
                {
                    valence *= 1.25;
                } else if self.lower(i - 3) == "without"
                    && (self.lower(i - 2) == "doubt" || self.lower(i - 1) == "doubt")
                {
                } else if self.negated(i - 3) {
                    valence *= self.config.negation_scalar;
                }
            }
        }
        valence
    }

    fn idiom_check(&self, mut valence: f64, i: usize) -> f64 {
        let (w3, w2, w1, w0) = (self.lower(i - 3), self.lower(i - 2), self.lower(i - 1), self.lower(i));
        let one_zero = format!("{w1} {w0}");
        let two_one_zero = format!("{w2} {w1} {w0}");
        let two_one = format!("{w2} {w1}");
        let three_two_one = format!("{w3} {w2} {w1}");
        let three_two = format!("{w3} {w2}");
        for seq in [&one_zero, &two_one_zero, &two_one, &three_two_one, &three_two] {
            if let Some(v) = special_case(seq) {
                valence = v;
                break;
            }
        }
        let n = self.tokens.len();
        if n - 1 > i {
            if let Some(v) = special_case(&format!("{w0} {}", self.lower(i + 1))) {
                valence = v;
            }
        }
        if n - 1 > i + 1 {
            let phrase = format!("{w0} {} {}", self.lower(i + 1), self.lower(i + 2));
            if let Some(v) = special_case(&phrase) {
                valence = v;
            }
        }
        for ngram in [&three_two_one, &three_two, &two_one] {
            if let Some(b) = self.lexicon.booster(ngram) {
                valence += b;
            }
        }
        valence
    }

    fn least_check(&self, valence: f64, i: usize) -> f64 {
        if i > 0 && self.lower(i - 1) == "least" && !self.in_lexicon(i - 1) {
            if i > 1 {
                let before = self.lower(i - 2);
                if before != "at" && before != "very" {
                    return valence * self.config.negation_scalar;
                }
                return valence;
            }
            return valence * self.config.negation_scalar;
        }
        valence
    }

    fn token_valence(&self, i: usize) -> f64 {
        let Some(base) = self.lexicon.valence(self.lower(i)) else {
            return 0.0;
        };
        let n = self.tokens.len();
        let mut valence = base;
        if self.lower(i) == "no" && i + 1 < n && self.in_lexicon(i + 1) {
            valence = 0.0;
        }
        if (i > 0 && self.lower(i - 1) == "no")
            || (i > 1 && self.lower(i - 2) == "no")
            || (i > 2
                && self.lower(i - 3) == "no"
                && matches!(self.lower(i - 1), "or" | "nor"))
        {
            valence = base * self.config.negation_scalar;
        }
        if is_upper(self.tokens[i].raw) && self.cap_differential {
            if valence > 0.0 {
                valence += self.config.caps_increment;
            } else {
                valence -= self.config.caps_increment;
            }
        }
        for distance in 0..3 {
            if i > distance && !self.in_lexicon(i - distance - 1) {
                let mut s = self.modifier_scalar(i - distance - 1, valence);
                if s != 0.0 {
                    s *= match distance {
                        0 => 1.0,
                        1 => 0.95,
                        _ => 0.9,
                    };
                }
                valence += s;
                valence = self.negation_check(valence, distance, i);
                if distance == 2 {
                    valence = self.idiom_check(valence, i);
                }
            }
        }
        self.least_check(valence, i)
    }

    fn valences(&self) -> Vec<f64> {
        let n = self.tokens.len();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let w = self.lower(i);
            if self.lexicon.booster(w).is_some()
                || (w == "kind" && i + 1 < n && self.lower(i + 1) == "of")
            {
                out.push(0.0);
            } else {
                out.push(self.token_valence(i));
            }
        }
        if let Some(b) = self.tokens.iter().position(|t| t.lower == "but") {
            for (j, v) in out.iter_mut().enumerate() {
                if j < b {
                    *v *= self.config.but_before_weight;
                } else if j > b {
                    *v *= self.config.but_after_weight;
                }
            }
        }
        out
    }
}

fn punctuation_emphasis(text: &str, config: &ScorerConfig) -> f64 {
    let exclamations = text.matches('!').count().min(config.max_exclamations) as f64;
    let questions = text.matches('?').count();
    let question_bonus = match questions {
        0 | 1 => 0.0,
        2 | 3 => questions as f64 * config.question_increment,
        _ => config.max_question_bonus,
    };
    exclamations * config.exclamation_increment + question_bonus
}

/// `x / sqrt(x^2 + alpha)`.
pub fn normalize(sum: f64, alpha: f64) -> f64 {
    (sum / (sum * sum + alpha).sqrt()).clamp(-1.0, 1.0)
}

/// Compound score of `text` in [-1, 1]; 0 for empty or fully out-of-lexicon text.
pub fn score_text(lexicon: &Lexicon, config: &ScorerConfig, text: &str) -> f64 {
    let cleaned;
    let text = if config.strip_mentions_and_urls {
        cleaned = strip_mentions_and_urls(text);
        cleaned.as_str()
    } else {
        text.trim()
    };
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return 0.0;
    }
    let upper = tokens.iter().filter(|t| is_upper(t.raw)).count();
    let sentence = Sentence {
        cap_differential: upper > 0 && upper < tokens.len(),
        tokens,
        lexicon,
        config,
    };
    let mut sum: f64 = sentence.valences().iter().sum();
    let emphasis = punctuation_emphasis(text, config);
    if sum > 0.0 {
        sum += emphasis;
    } else if sum < 0.0 {
        sum -= emphasis;
    }
    normalize(sum, config.normalization_alpha)
}
