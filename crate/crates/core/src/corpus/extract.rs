//! Lexical method extraction from curly-brace source text.
//!
//! This is deliberately not a language parser. The scan tracks brace
//! scopes, remembers which braces open a `class`/`interface`/`enum` body,
//! and recognizes a method declaration as `name ( params ) [throws ...] {`
//! at class-body (or top) level. Abstract declarations never reach a `{`
//! and constructors are dropped by comparing the name against the nearest
//! enclosing class. Anonymous and local classes live inside method bodies,
//! which the scan does not descend into for further declarations.

use super::{CorpusError, MethodText};
use crate::lexer::is_reserved_word;
use crate::lexer::{tokenize_spanned, RawToken};

/// All concrete method declarations of `source`, in source order.
///
/// Each returned body runs from the first token of the declaration
/// (modifiers, type parameters, return type) through the matching closing
/// brace, so it is always brace-, paren-, and bracket-balanced.
pub fn extract_methods(source: &str) -> Result<Vec<MethodText>, CorpusError> {
    let tokens = tokenize_spanned(source)?;
    check_balance(&tokens)?;

    let mut methods = Vec::new();
    // Brace scopes; `Some(name)` marks a class-like body, the synthetic
    // bottom entry stands for the top level.
    let mut scopes: Vec<Option<String>> = vec![Some(String::new())];
    let mut pending_class: Option<String> = None;

    let mut k = 0;
    while k < tokens.len() {
        let text = tokens[k].text.as_str();
        match text {
            "class" | "interface" | "enum" => {
                if let Some(next) = tokens.get(k + 1) {
                    if is_identifier(&next.text) || is_reserved_word(&next.text) {
                        pending_class = Some(next.text.clone());
                    }
                }
            }
            "{" => {
                scopes.push(pending_class.take());
            }
            "}" => {
                if scopes.len() > 1 {
                    scopes.pop();
                }
            }
            _ => {
                let at_declaration_level = scopes.last().map(Option::is_some) == Some(true);
                if at_declaration_level
                    && is_identifier(text)
                    && tokens.get(k + 1).map(|t| t.text.as_str()) == Some("(")
                    && (k == 0 || tokens[k - 1].text != "new")
                {
                    // the scan keeps walking token by token afterwards;
                    // the body's braces are handled by the scope stack
                    if let Some(body_close) = method_braces(&tokens, k + 1)? {
                        let class_name = scopes.last().and_then(|s| s.as_deref()).unwrap_or("");
                        if text != class_name {
                            let start = signature_start(&tokens, k);
                            methods.push(MethodText {
                                name: text.to_string(),
                                body: source[tokens[start].start..tokens[body_close].end]
                                    .to_string(),
                                origin: String::new(),
                            });
                        }
                    }
                }
            }
        }
        k += 1;
    }
    Ok(methods)
}

fn is_identifier(text: &str) -> bool {
    let mut chars = text.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_' || c == '$')
        && !is_reserved_word(text)
        && text != "true"
        && text != "false"
        && text != "null"
}

/// Every `{`/`}` and `(`/`)` must match; reports the byte offset of the
/// first offender.
fn check_balance(tokens: &[RawToken]) -> Result<(), CorpusError> {
    for (open, close) in [("{", "}"), ("(", ")"), ("[", "]")] {
        let mut stack = Vec::new();
        for t in tokens {
            if t.text == open {
                stack.push(t.start);
            } else if t.text == close && stack.pop().is_none() {
                return Err(CorpusError::UnbalancedDelimiters(t.start));
            }
        }
        if let Some(pos) = stack.pop() {
            return Err(CorpusError::UnbalancedDelimiters(pos));
        }
    }
    Ok(())
}

/// For a declaration whose parameter list opens at `open_paren`, the
/// position of the body's closing `}`, or `None` when the declaration is
/// abstract (ends in `;`).
fn method_braces(tokens: &[RawToken], open_paren: usize) -> Result<Option<usize>, CorpusError> {
    let close_paren = match match_token(tokens, open_paren, "(", ")") {
        Some(p) => p,
        None => return Err(CorpusError::UnbalancedDelimiters(tokens[open_paren].start)),
    };
    let mut k = close_paren + 1;
    if tokens.get(k).map(|t| t.text.as_str()) == Some("throws") {
        k += 1;
        while let Some(t) = tokens.get(k) {
            if is_identifier(&t.text) || is_reserved_word(&t.text) || t.text == "," || t.text == "."
            {
                k += 1;
            } else {
                break;
            }
        }
    }
    match tokens.get(k).map(|t| t.text.as_str()) {
        Some("{") => {
            let close = match_token(tokens, k, "{", "}")
                .ok_or(CorpusError::UnbalancedDelimiters(tokens[k].start))?;
            Ok(Some(close))
        }
        _ => Ok(None),
    }
}

fn match_token(tokens: &[RawToken], open_pos: usize, open: &str, close: &str) -> Option<usize> {
    let mut depth = 0usize;
    for (k, t) in tokens.iter().enumerate().skip(open_pos) {
        if t.text == open {
            depth += 1;
        } else if t.text == close {
            depth -= 1;
            if depth == 0 {
                return Some(k);
            }
        }
    }
    None
}

/// Walk back from the method name over plausible signature tokens
/// (modifiers, return type, generics, annotations) to the declaration
/// start.
fn signature_start(tokens: &[RawToken], name_pos: usize) -> usize {
    let mut k = name_pos;
    while k > 0 {
        let prev = &tokens[k - 1].text;
        let keep = is_identifier(prev)
            || is_reserved_word(prev)
            || matches!(prev.as_str(), "<" | ">" | "," | "[" | "]" | "." | "@" | "?");
        if keep {
            k -= 1;
        } else {
            break;
        }
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexer::tokenize;

    #[test]
    fn extracts_concrete_method_skips_abstract_and_constructor() {
        let source = "
            abstract class Counter {
                Counter(int start) { this.start = start; }
                abstract int step(int by);
                int bump(int by) { return start + by; }
            }
        ";
        let methods = extract_methods(source).unwrap();
        assert_eq!(methods.len(), 1);
        assert_eq!(methods[0].name, "bump");
        assert!(methods[0].body.starts_with("int bump"));
        assert!(methods[0].body.ends_with("return start + by; }"));
    }

    #[test]
    fn bare_method_text_is_extracted() {
        let methods = extract_methods("int f(int n){ return n; }").unwrap();
        assert_eq!(methods.len(), 1);
        assert_eq!(methods[0].name, "f");
        assert_eq!(methods[0].body, "int f(int n){ return n; }");
    }

    #[test]
    fn unmatched_brace_is_reported() {
        let err = extract_methods("class A { int f() { return 1; }").unwrap_err();
        assert!(matches!(err, CorpusError::UnbalancedDelimiters(_)));
    }

    #[test]
    fn methods_come_back_in_source_order() {
        let source = "
            class Pair {
                int first() { return a; }
                int second() { return b; }
            }
        ";
        let names: Vec<String> = extract_methods(source)
            .unwrap()
            .into_iter()
            .map(|m| m.name)
            .collect();
        assert_eq!(names, vec!["first", "second"]);
    }

    #[test]
    fn signature_keeps_modifiers_and_generics() {
        let source = "
            class Box {
                public static final List<String> names(int max) throws Exception {
                    return new ArrayList<>();
                }
            }
        ";
        let methods = extract_methods(source).unwrap();
        assert_eq!(methods.len(), 1);
        assert!(methods[0]
            .body
            .starts_with("public static final List<String> names"));
    }

    #[test]
    fn nested_anonymous_class_methods_are_skipped() {
        let source = "
            class Outer {
                void run() {
                    helper(new Object() {
                        int hidden() { return 1; }
                    });
                }
                int visible() { return 2; }
            }
        ";
        let names: Vec<String> = extract_methods(source)
            .unwrap()
            .into_iter()
            .map(|m| m.name)
            .collect();
        assert_eq!(names, vec!["run", "visible"]);
    }

    #[test]
    fn calls_inside_bodies_are_not_declarations() {
        let source = "
            class A {
                int f() { g(); return h(1); }
            }
        ";
        let names: Vec<String> = extract_methods(source)
            .unwrap()
            .into_iter()
            .map(|m| m.name)
            .collect();
        assert_eq!(names, vec!["f"]);
    }

    #[test]
    fn every_extracted_body_is_balanced_and_lexes() {
        let source = "
            class W {
                int a(int n) { if (n > 0) { return n; } return -n; }
                void b() { for (int i = 0; i < 3; i++) { log(i); } }
            }
        ";
        for m in extract_methods(source).unwrap() {
            let toks = tokenize(&m.body).unwrap();
            for (open, close) in [("{", "}"), ("(", ")")] {
                let opens = toks.iter().filter(|t| *t == open).count();
                let closes = toks.iter().filter(|t| *t == close).count();
                assert_eq!(opens, closes, "unbalanced {open}{close} in {}", m.name);
            }
        }
    }

    #[test]
    fn method_count_bounded_by_paren_bearing_declarations() {
        let source = "
            class B {
                int x = f(1);
                int g() { return x; }
            }
        ";
        let methods = extract_methods(source).unwrap();
        let parens = source.matches('(').count();
        assert!(methods.len() <= parens);
        assert_eq!(methods.len(), 1);
        assert_eq!(methods[0].name, "g");
    }

    #[test]
    fn empty_source_yields_no_methods() {
        assert!(extract_methods("").unwrap().is_empty());
        assert!(extract_methods("class Empty { int x; }")
            .unwrap()
            .is_empty());
    }
}
