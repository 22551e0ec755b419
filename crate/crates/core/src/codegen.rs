//! C source export of a quantized forest.
//!
//! Output is a self-contained header with `N`, `M`, `LEAF_ONE` defines and
//! the FOREST / ROOT / LEAVES arrays. It depends only on the forest contents,
//! so identical forests always produce byte-identical text.

use std::fmt::Write as _;

use crate::error::{ArfError, Result};
use crate::quantize::QuantizedForest;

/// Renders `qf` as C. `prefix` namespaces every symbol and must be a valid
/// C identifier.
pub fn export_c(qf: &QuantizedForest, prefix: &str) -> Result<String> {
    qf.validate()?;
    let valid_ident = prefix
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && prefix
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_');
    if !valid_ident {
        return Err(ArfError::InvalidConfig(format!(
            "`{prefix}` is not a valid C identifier"
        )));
    }
    let upper = prefix.to_ascii_uppercase();
    let m = qf.num_classes();
    let mut s = String::new();

    // Writing to a String cannot fail.
    let _ = writeln!(
        s,
        "/* Quantized random forest. Generated file, do not edit. */"
    );
    let _ = writeln!(s, "#ifndef {upper}_FOREST_H");
    let _ = writeln!(s, "#define {upper}_FOREST_H");
    let _ = writeln!(s);
    let _ = writeln!(s, "#include <stdint.h>");
    let _ = writeln!(s);
    let _ = writeln!(s, "#define {upper}_N_TREES {}", qf.num_trees());
    let _ = writeln!(s, "#define {upper}_N_CLASSES {m}");
    let _ = writeln!(s, "#define {upper}_N_FEATURES {}", qf.num_features());
    let _ = writeln!(s, "#define {upper}_N_NODES {}", qf.nodes().len());
    let _ = writeln!(s, "#define {upper}_N_LEAVES {}", qf.num_leaves());
    let _ = writeln!(s, "#define {upper}_MAX_DEPTH {}", qf.max_depth());
    let _ = writeln!(s, "#define {upper}_LEAF_ONE {}", qf.leaf_one());
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "/* fidx == -1 marks a leaf; its right field indexes LEAVES. */"
    );
    let _ = writeln!(s, "/* The left child of node i is node i + 1. */");
    let _ = writeln!(s, "typedef struct {{");
    let _ = writeln!(s, "    int16_t fidx;");
    let _ = writeln!(s, "    int16_t th;");
    let _ = writeln!(s, "    uint16_t right;");
    let _ = writeln!(s, "}} {prefix}_node_t;");
    let _ = writeln!(s);

    let _ = writeln!(
        s,
        "static const {prefix}_node_t {prefix}_FOREST[{upper}_N_NODES] = {{"
    );
    for (i, n) in qf.nodes().iter().enumerate() {
        let _ = writeln!(s, "    {{ {}, {}, {} }}, /* {i} */", n.fidx, n.th, n.right);
    }
    let _ = writeln!(s, "}};");
    let _ = writeln!(s);

    let _ = writeln!(
        s,
        "static const uint16_t {prefix}_ROOT[{upper}_N_TREES] = {{"
    );
    for chunk in qf.roots().chunks(12) {
        let line: Vec<String> = chunk.iter().map(u16::to_string).collect();
        let _ = writeln!(s, "    {},", line.join(", "));
    }
    let _ = writeln!(s, "}};");
    let _ = writeln!(s);

    let _ = writeln!(
        s,
        "static const int16_t {prefix}_LEAVES[{upper}_N_LEAVES][{upper}_N_CLASSES] = {{"
    );
    for (r, row) in qf.leaves().chunks(m).enumerate() {
        let line: Vec<String> = row.iter().map(i16::to_string).collect();
        let _ = writeln!(s, "    {{ {} }}, /* {r} */", line.join(", "));
    }
    let _ = writeln!(s, "}};");
    let _ = writeln!(s);
    let _ = writeln!(s, "#endif /* {upper}_FOREST_H */");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Dataset;
    use crate::forest::{Forest, TreeNode};
    use crate::quantize::quantize_forest;

    #[test]
    fn single_leaf_forest() {
        let f = Forest::new(2, 1, 0, vec![TreeNode::leaf(vec![0.25, 0.75])]).unwrap();
        let cal = Dataset::from_rows(vec![vec![0.0], vec![1.0]], vec![0, 1], 2).unwrap();
        let qf = quantize_forest(&f, &cal).unwrap();
        let c = export_c(&qf, "rf").unwrap();
        assert!(c.contains("#define RF_N_NODES 1\n"));
        assert!(c.contains("    { -1, 0, 0 }, /* 0 */\n"));
        assert!(c.contains("    { 4096, 12288 }, /* 0 */\n"));
        assert!(c.contains("static const uint16_t rf_ROOT[RF_N_TREES] = {\n    0,\n};"));
        assert!(export_c(&qf, "9rf").is_err());
        assert!(export_c(&qf, "").is_err());
        assert!(export_c(&qf, "my-rf").is_err());
    }
}
