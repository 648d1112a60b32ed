mod common;

use common::gen::entity_graph;
use proptest::prelude::*;
use shapeforge::linearize::{build_prompt, decode_turtlelight, encode_turtlelight, split_prompt};
use shapeforge::rdf::{Iri, PrefixMap};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn decode_inverts_encode(g in entity_graph()) {
        let prefixes = PrefixMap::standard();
        let text = encode_turtlelight(&g, &prefixes).unwrap().text;
        prop_assert!(!text.contains('\n') || text.contains("\\n") || g.iter().any(|t| t.object.lexical_form().contains('\n')));
        let back = decode_turtlelight(&text, &prefixes).map_err(|e| TestCaseError::fail(format!("{e}: {text}")))?;
        prop_assert_eq!(back, g);
    }

    #[test]
    fn encoding_is_canonical(g in entity_graph()) {
        let prefixes = PrefixMap::standard();
        let text = encode_turtlelight(&g, &prefixes).unwrap().text;
        let again = encode_turtlelight(&decode_turtlelight(&text, &prefixes).unwrap(), &prefixes).unwrap().text;
        prop_assert_eq!(again, text);
    }

    #[test]
    fn decoder_never_panics(text in "\\PC{0,60}") {
        let _ = decode_turtlelight(&text, &PrefixMap::standard());
    }

    #[test]
    fn prompts_split_back(local in "[A-Za-z_()]{1,12}", text in "\\PC{1,40}") {
        prop_assume!(!text.trim().is_empty());
        let entity = Iri::new(format!("http://dbpedia.org/resource/{local}")).unwrap();
        let prompt = build_prompt(&entity, &text).unwrap();
        prop_assert_eq!(split_prompt(&prompt), Some((entity, text.as_str())));
    }
}
