use std::fmt::Write as _;

use super::ast::*;

fn fields(out: &mut String, fields: &[Field]) {
    for (i, f) in fields.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{} {}", f.ty, f.name);
    }
}

/// Pretty-prints a package as a single `.hal` document.
pub fn render_package(ast: &PackageAst) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "package {};", ast.id);
    if !ast.imports.is_empty() {
        out.push('\n');
        for imp in &ast.imports {
            let _ = writeln!(out, "import {imp};");
        }
    }
    for decl in &ast.types {
        out.push('\n');
        match decl {
            TypeDecl::Struct(s) => {
                let _ = writeln!(out, "struct {} {{", s.name);
                for f in &s.fields {
                    let _ = writeln!(out, "    {} {};", f.ty, f.name);
                }
                out.push_str("};\n");
            }
            TypeDecl::Enum(e) => {
                let _ = writeln!(out, "enum {} : {} {{", e.name, e.underlying);
                for v in &e.variants {
                    match v.value {
                        Some(n) => {
                            let _ = writeln!(out, "    {} = {},", v.name, n);
                        }
                        None => {
                            let _ = writeln!(out, "    {},", v.name);
                        }
                    }
                }
                out.push_str("};\n");
            }
        }
    }
    for iface in &ast.interfaces {
        out.push('\n');
        let _ = write!(out, "interface {}", iface.name);
        if let Some(parent) = &iface.extends {
            let _ = write!(out, " extends {parent}");
        }
        out.push_str(" {\n");
        for m in &iface.methods {
            out.push_str("    ");
            if m.oneway {
                out.push_str("oneway ");
            }
            let _ = write!(out, "{}(", m.name);
            fields(&mut out, &m.args);
            out.push(')');
            if !m.returns.is_empty() {
                out.push_str(" generates (");
                fields(&mut out, &m.returns);
                out.push(')');
            }
            out.push_str(";\n");
        }
        out.push_str("};\n");
    }
    out
}
