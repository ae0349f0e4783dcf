use proptest::prelude::*;

use tvcast_core::dsl::{build_document, format_document, format_dsl, parse_dsl, parse_dsl_with_spans};
use tvcast_core::hierarchy::{Orientation, ScreenInfo};
use tvcast_core::layout::{build_constraints, solve_layout, LayoutConfig, SizeTable};
use tvcast_core::transform::{ItemKind, TvGroup, TvItem};
use tvcast_core::{SizeClass, TvGroupCategory, TvPage};

fn title() -> impl Strategy<Value = String> {
    prop_oneof![
        "[A-Za-z ]{0,12}",
        "\\PC{0,8}",
        Just("say \"hi\"\\".to_string()),
        Just("line\nbreak\ttab\u{1}".to_string()),
    ]
}

fn group(category: TvGroupCategory) -> impl Strategy<Value = TvGroup> {
    (
        prop::sample::select(SizeClass::ALL.to_vec()),
        prop::collection::vec((title(), any::<bool>(), 0..500usize), 1..=6),
    )
        .prop_map(move |(size_class, items)| TvGroup {
            category,
            size_class,
            items: items
                .into_iter()
                .map(|(title, selected, src)| TvItem {
                    id: String::new(),
                    kind: ItemKind::Image,
                    source: format!("src_{src}"),
                    title,
                    selected,
                    phone_area: 1000,
                    members: Vec::new(),
                })
                .collect(),
            origins: vec![0],
        })
}

fn page() -> impl Strategy<Value = TvPage> {
    let body: Vec<TvGroupCategory> = TvGroupCategory::ALL
        .into_iter()
        .filter(|&c| c != TvGroupCategory::Channel)
        .collect();
    (
        prop::option::of(group(TvGroupCategory::Channel)),
        prop::collection::vec(prop::sample::select(body).prop_flat_map(group), 1..=5),
    )
        .prop_map(|(channel, rest)| {
            let mut groups: Vec<TvGroup> = channel.into_iter().chain(rest).collect();
            let mut n = 0;
            for item in groups.iter_mut().flat_map(|g| g.items.iter_mut()) {
                n += 1;
                item.id = format!("item_{n}");
            }
            TvPage {
                screen: ScreenInfo::new(1920, 1080, Orientation::Landscape).unwrap(),
                groups,
            }
        })
}

const TOKENS: &[&str] = &[
    "Row", "Col", "Chan", "PicInfo", "Tab", "ToolBar", "(", ")", ",", "large", "selected", "\"t\"", "\"", "\\", " ",
    "\n", "x", "7", "é", "\u{0}", "{", "Srch", "Grid",
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn emitted_documents_parse_back(page in page()) {
        let system = build_constraints(&page, SizeTable::builtin(), &LayoutConfig::default()).unwrap();
        let solution = solve_layout(&system).unwrap();
        let doc = build_document(&page, &solution).unwrap();
        let text = format_document(&doc);
        prop_assert_eq!(parse_dsl(&text).unwrap(), doc);
        let formatted = format_dsl(&text).unwrap();
        prop_assert_eq!(&formatted, &text);
        prop_assert_eq!(format_dsl(&formatted).unwrap(), formatted);
    }

    #[test]
    fn token_soup_never_panics(parts in prop::collection::vec(prop::sample::select(TOKENS), 0..40)) {
        let text: String = parts.concat();
        if let Ok(doc) = parse_dsl(&text) {
            prop_assert_eq!(parse_dsl(&format_document(&doc)).unwrap(), doc);
        }
        let _ = parse_dsl_with_spans(&text);
    }

    #[test]
    fn arbitrary_text_never_panics(text in "\\PC{0,80}") {
        let _ = parse_dsl(&text);
    }
}

#[test]
fn reformatting_normalises_spacing() {
    let messy = "Row(  Tab( \"A\" ,selected ),Tab(\"B\")  )\n\n  Col(Chan(\"x\"))";
    let formatted = format_dsl(messy).unwrap();
    assert_eq!(formatted, "Row(Tab(\"A\", selected), Tab(\"B\"))\nCol(Chan(\"x\"))\n");
    assert_eq!(format_dsl(&formatted).unwrap(), formatted);
}
