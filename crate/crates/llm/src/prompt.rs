use layout_critic::layout::{serialize_spec, CanvasSpec, ElementCategory};

const LEGEND: &[(ElementCategory, &str)] = &[
    (ElementCategory::Text, "a block of copy"),
    (ElementCategory::Logo, "a brand mark"),
    (ElementCategory::Underlay, "a backing shape that must fully contain exactly one text element"),
    (ElementCategory::Embellishment, "a decorative accent"),
];

/// Deterministic instruction text for one canvas. The serialized environment
/// is embedded verbatim, so masked elements appear once each as the mask token.
pub fn build_prompt(spec: &CanvasSpec) -> String {
    let mut p = String::new();
    p.push_str("You are a graphic layout designer. Place every element of the canvas below.\n\n");
    p.push_str("Coordinates are normalized: (0, 0) is the top-left corner and (1, 1) the ");
    p.push_str("bottom-right. A box is x, y (top-left corner), w, h, and must stay inside the canvas.\n\n");
    p.push_str("Element categories:\n");
    for (c, what) in LEGEND {
        p.push_str(&format!("- {c}: {what}\n"));
    }
    p.push_str("\nSaliency boxes mark important image content. Keep text, logos and ");
    p.push_str("embellishments off them; underlays may cover them.\n\n");
    p.push_str("Environment (elements whose geometry is hidden must be placed):\n");
    p.push_str(&serialize_spec(spec));
    p.push_str("\n\nAnswer with two blocks and nothing else. First a <design> block with your ");
    p.push_str("reasoning about alignment, spacing, balance and avoiding salient regions. ");
    p.push_str("Then a <layout> block holding JSON of the form\n");
    p.push_str(r#"{"elements": [{"category": "text", "x": 0.1, "y": 0.2, "w": 0.5, "h": 0.1}]}"#);
    p.push_str("\nwith exactly one entry per element, listed in the element order above.\n\n");
    p.push_str("<design>\n...\n</design>\n<layout>\n...\n</layout>\n");
    p
}
