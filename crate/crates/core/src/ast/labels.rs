//! Grammar-kind to label tables. Both languages map onto one label set so
//! every downstream view, and the node-type heatmap, treats C and Java alike.
//! Kinds missing from a table are labelled by CamelCasing the kind name.

use crate::corpus::Lang;

pub static LABELS_C: &[(&str, &str)] = &[
    ("translation_unit", "FileAST"),
    ("function_definition", "FuncDef"),
    ("declaration", "Decl"),
    ("field_declaration", "Decl"),
    ("parameter_declaration", "Param"),
    ("variadic_parameter", "Param"),
    ("init_declarator", "InitDecl"),
    ("function_declarator", "FuncDecl"),
    ("parameter_list", "ParamList"),
    ("array_declarator", "ArrayDecl"),
    ("pointer_declarator", "PtrDecl"),
    ("abstract_pointer_declarator", "PtrDecl"),
    ("abstract_array_declarator", "ArrayDecl"),
    ("primitive_type", "IdentifierType"),
    ("sized_type_specifier", "IdentifierType"),
    ("type_identifier", "IdentifierType"),
    ("type_descriptor", "Typename"),
    ("storage_class_specifier", "Qualifier"),
    ("type_qualifier", "Qualifier"),
    ("initializer_list", "InitList"),
    ("initializer_pair", "NamedInitializer"),
    ("compound_statement", "Compound"),
    ("if_statement", "If"),
    ("for_statement", "For"),
    ("while_statement", "While"),
    ("do_statement", "DoWhile"),
    ("switch_statement", "Switch"),
    ("case_statement", "Case"),
    ("break_statement", "Break"),
    ("continue_statement", "Continue"),
    ("return_statement", "Return"),
    ("goto_statement", "Goto"),
    ("labeled_statement", "Label"),
    ("binary_expression", "BinaryOp"),
    ("unary_expression", "UnaryOp"),
    ("update_expression", "UnaryOp"),
    ("pointer_expression", "UnaryOp"),
    ("sizeof_expression", "UnaryOp"),
    ("assignment_expression", "Assignment"),
    ("call_expression", "FuncCall"),
    ("argument_list", "ExprList"),
    ("comma_expression", "ExprList"),
    ("subscript_expression", "ArrayRef"),
    ("field_expression", "StructRef"),
    ("conditional_expression", "TernaryOp"),
    ("cast_expression", "Cast"),
    ("compound_literal_expression", "CompoundLiteral"),
    ("identifier", "ID"),
    ("field_identifier", "ID"),
    ("statement_identifier", "ID"),
    ("number_literal", "Constant"),
    ("char_literal", "Constant"),
    ("string_literal", "Constant"),
    ("concatenated_string", "Constant"),
    ("system_lib_string", "Constant"),
    ("true", "Constant"),
    ("false", "Constant"),
    ("null", "Constant"),
    ("type_definition", "Typedef"),
    ("struct_specifier", "Struct"),
    ("union_specifier", "Union"),
    ("enum_specifier", "Enum"),
    ("enumerator_list", "EnumeratorList"),
    ("enumerator", "Enumerator"),
    ("field_declaration_list", "DeclList"),
    ("preproc_def", "Define"),
    ("preproc_function_def", "Define"),
    ("preproc_arg", "Constant"),
];

pub static LABELS_JAVA: &[(&str, &str)] = &[
    ("program", "FileAST"),
    ("class_declaration", "ClassDecl"),
    ("interface_declaration", "ClassDecl"),
    ("enum_declaration", "ClassDecl"),
    ("class_body", "ClassBody"),
    ("interface_body", "ClassBody"),
    ("method_declaration", "FuncDef"),
    ("constructor_declaration", "FuncDef"),
    ("formal_parameters", "ParamList"),
    ("formal_parameter", "Param"),
    ("spread_parameter", "Param"),
    ("catch_formal_parameter", "Param"),
    ("local_variable_declaration", "Decl"),
    ("field_declaration", "Decl"),
    ("variable_declarator", "InitDecl"),
    ("integral_type", "IdentifierType"),
    ("floating_point_type", "IdentifierType"),
    ("boolean_type", "IdentifierType"),
    ("void_type", "IdentifierType"),
    ("type_identifier", "IdentifierType"),
    ("scoped_type_identifier", "IdentifierType"),
    ("generic_type", "IdentifierType"),
    ("array_type", "ArrayDecl"),
    ("dimensions", "Dims"),
    ("dimensions_expr", "Dims"),
    ("modifiers", "Qualifier"),
    ("array_initializer", "InitList"),
    ("block", "Compound"),
    ("constructor_body", "Compound"),
    ("if_statement", "If"),
    ("for_statement", "For"),
    ("enhanced_for_statement", "For"),
    ("while_statement", "While"),
    ("do_statement", "DoWhile"),
    ("switch_expression", "Switch"),
    ("switch_block", "SwitchBlock"),
    ("switch_block_statement_group", "Case"),
    ("switch_rule", "Case"),
    ("switch_label", "CaseLabel"),
    ("break_statement", "Break"),
    ("continue_statement", "Continue"),
    ("return_statement", "Return"),
    ("yield_statement", "Return"),
    ("labeled_statement", "Label"),
    ("throw_statement", "Throw"),
    ("try_statement", "Try"),
    ("try_with_resources_statement", "Try"),
    ("catch_clause", "Catch"),
    ("finally_clause", "Finally"),
    ("synchronized_statement", "Sync"),
    ("assert_statement", "Assert"),
    ("binary_expression", "BinaryOp"),
    ("instanceof_expression", "BinaryOp"),
    ("unary_expression", "UnaryOp"),
    ("update_expression", "UnaryOp"),
    ("assignment_expression", "Assignment"),
    ("method_invocation", "FuncCall"),
    ("explicit_constructor_invocation", "FuncCall"),
    ("argument_list", "ExprList"),
    ("array_access", "ArrayRef"),
    ("field_access", "StructRef"),
    ("ternary_expression", "TernaryOp"),
    ("cast_expression", "Cast"),
    ("object_creation_expression", "New"),
    ("array_creation_expression", "New"),
    ("lambda_expression", "Lambda"),
    ("method_reference", "MethodRef"),
    ("identifier", "ID"),
    ("scoped_identifier", "ID"),
    ("this", "ID"),
    ("super", "ID"),
    ("decimal_integer_literal", "Constant"),
    ("hex_integer_literal", "Constant"),
    ("octal_integer_literal", "Constant"),
    ("binary_integer_literal", "Constant"),
    ("decimal_floating_point_literal", "Constant"),
    ("hex_floating_point_literal", "Constant"),
    ("character_literal", "Constant"),
    ("string_literal", "Constant"),
    ("class_literal", "Constant"),
    ("null_literal", "Constant"),
    ("true", "Constant"),
    ("false", "Constant"),
    ("marker_annotation", "Annotation"),
    ("annotation", "Annotation"),
    ("type_arguments", "TypeArgs"),
    ("throws", "Throws"),
];

/// Kinds that head their own statement tree.
static STATEMENTS_C: &[&str] = &[
    "function_definition",
    "declaration",
    "expression_statement",
    "if_statement",
    "for_statement",
    "while_statement",
    "do_statement",
    "switch_statement",
    "case_statement",
    "return_statement",
    "break_statement",
    "continue_statement",
    "goto_statement",
    "labeled_statement",
    "type_definition",
];

static STATEMENTS_JAVA: &[&str] = &[
    "class_declaration",
    "interface_declaration",
    "enum_declaration",
    "method_declaration",
    "constructor_declaration",
    "field_declaration",
    "local_variable_declaration",
    "expression_statement",
    "explicit_constructor_invocation",
    "if_statement",
    "for_statement",
    "enhanced_for_statement",
    "while_statement",
    "do_statement",
    "switch_expression",
    "switch_block_statement_group",
    "switch_rule",
    "return_statement",
    "yield_statement",
    "break_statement",
    "continue_statement",
    "throw_statement",
    "try_statement",
    "try_with_resources_statement",
    "labeled_statement",
    "synchronized_statement",
    "assert_statement",
];

/// Kinds whose children are a sequence of statements.
static CONTAINERS_C: &[&str] = &["compound_statement"];
static CONTAINERS_JAVA: &[&str] = &["block", "constructor_body", "class_body", "switch_block"];

pub fn is_statement_kind(lang: Lang, kind: &str) -> bool {
    match lang {
        Lang::C => STATEMENTS_C.contains(&kind),
        Lang::Java => STATEMENTS_JAVA.contains(&kind),
    }
}

pub fn is_block_container(lang: Lang, kind: &str) -> bool {
    match lang {
        Lang::C => CONTAINERS_C.contains(&kind),
        Lang::Java => CONTAINERS_JAVA.contains(&kind),
    }
}

fn table_label(lang: Lang, kind: &str) -> Option<&'static str> {
    let table = match lang {
        Lang::C => LABELS_C,
        Lang::Java => LABELS_JAVA,
    };
    table.iter().find(|(k, _)| *k == kind).map(|(_, l)| *l)
}

/// Literal kinds are kept whole as one leaf (and one lexed token).
pub(crate) fn is_literal_kind(lang: Lang, kind: &str) -> bool {
    table_label(lang, kind) == Some("Constant")
}

pub fn label_for(lang: Lang, kind: &str) -> String {
    if let Some(label) = table_label(lang, kind) {
        return label.to_string();
    }
    kind.split('_')
        .filter(|w| !w.is_empty())
        .map(|w| {
            let mut cs = w.chars();
            match cs.next() {
                Some(c) => c.to_ascii_uppercase().to_string() + cs.as_str(),
                None => String::new(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn tables_have_unique_kinds() {
        for table in [LABELS_C, LABELS_JAVA] {
            let kinds: HashSet<&str> = table.iter().map(|(k, _)| *k).collect();
            assert_eq!(kinds.len(), table.len());
        }
    }

    #[test]
    fn fallback_is_camel_case() {
        assert_eq!(label_for(Lang::C, "gnu_asm_expression"), "GnuAsmExpression");
        assert_eq!(label_for(Lang::Java, "while_statement"), "While");
    }
}
