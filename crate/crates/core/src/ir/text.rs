use thiserror::Error;

use super::{ApiSpec, EnumSpec, InterfaceSpec, StructSpec, VarSpec, VarType};
use crate::blocktext::{self, Block, Value};
use crate::idl::{is_valid_package_name, FqName, Scalar, Version};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("spec syntax error at {0}")]
    Syntax(#[from] blocktext::SyntaxError),
    #[error("unknown type tag `{0}`")]
    UnknownTypeTag(String),
    #[error("invalid spec: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> SpecError {
    SpecError::Invalid(msg.into())
}

fn type_entries(block: &mut Block, ty: &VarType) {
    block.push_token("type", ty.type_tag());
    match ty {
        VarType::Scalar(s) => {
            block.push_str("scalar_type", s.as_str());
        }
        VarType::String => {}
        VarType::Vector(elem) => {
            let mut inner = Block::new();
            type_entries(&mut inner, elem);
            block.push_block("vector_value", inner);
        }
        VarType::Struct(s) => {
            block.push_str("predefined_type", &s.name);
            for f in &s.fields {
                block.push_block("struct_value", var_block(f));
            }
        }
        VarType::Enum(e) => {
            block.push_str("predefined_type", &e.name);
            let mut inner = Block::new();
            inner.push_str("scalar_type", e.scalar.as_str());
            for (name, value) in &e.enumerators {
                let mut en = Block::new();
                en.push_str("name", name).push_token("value", value);
                inner.push_block("enumerator", en);
            }
            block.push_block("enum_value", inner);
        }
        VarType::Interface(fq) => {
            block.push_str("predefined_type", fq.to_string());
        }
    }
}

fn var_block(v: &VarSpec) -> Block {
    let mut b = Block::new();
    b.push_str("name", &v.name);
    type_entries(&mut b, &v.ty);
    b
}

pub(crate) fn spec_block(spec: &InterfaceSpec) -> Block {
    let mut doc = Block::new();
    doc.push_str("component_name", &spec.component_name)
        .push_str("package", &spec.package)
        .push_str("version", spec.version.to_string());
    let mut iface = Block::new();
    for api in &spec.apis {
        let mut a = Block::new();
        a.push_str("name", &api.name)
            .push_token("is_inherited", api.is_inherited)
            .push_token("oneway", api.oneway);
        for arg in &api.args {
            a.push_block("arg", var_block(arg));
        }
        for ret in &api.returns {
            a.push_block("return_type_hidl", var_block(ret));
        }
        iface.push_block("api", a);
    }
    doc.push_block("interface", iface);
    doc
}

/// Renders the canonical, byte-stable text form of a spec.
pub fn emit_spec_text(spec: &InterfaceSpec) -> String {
    spec_block(spec).render()
}

pub fn parse_spec_text(text: &str) -> Result<InterfaceSpec, SpecError> {
    let doc = blocktext::parse(text)?;
    spec_from_block(&doc)
}

struct Fields<'a> {
    block: &'a Block,
    context: &'a str,
}

impl<'a> Fields<'a> {
    fn new(block: &'a Block, context: &'a str, allowed: &[&str]) -> Result<Self, SpecError> {
        for key in block.keys() {
            if !allowed.contains(&key) {
                return Err(invalid(format!("unexpected key `{key}` in {context}")));
            }
        }
        Ok(Self { block, context })
    }

    fn single(&self, key: &str) -> Result<&'a Value, SpecError> {
        let mut it = self
            .block
            .entries
            .iter()
            .filter(|(k, _)| k == key)
            .map(|(_, v)| v);
        let v = it
            .next()
            .ok_or_else(|| invalid(format!("missing `{key}` in {}", self.context)))?;
        if it.next().is_some() {
            return Err(invalid(format!("repeated `{key}` in {}", self.context)));
        }
        Ok(v)
    }

    fn string(&self, key: &str) -> Result<&'a str, SpecError> {
        self.single(key)?.as_str().ok_or_else(|| {
            invalid(format!(
                "`{key}` in {} must be a quoted string",
                self.context
            ))
        })
    }

    fn token(&self, key: &str) -> Result<&'a str, SpecError> {
        self.single(key)?
            .as_token()
            .ok_or_else(|| invalid(format!("`{key}` in {} must be a bare token", self.context)))
    }

    fn boolean(&self, key: &str) -> Result<bool, SpecError> {
        match self.token(key)? {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(invalid(format!(
                "`{key}` must be true or false, got `{other}`"
            ))),
        }
    }

    fn block(&self, key: &str) -> Result<&'a Block, SpecError> {
        self.single(key)?
            .as_block()
            .ok_or_else(|| invalid(format!("`{key}` in {} must be a block", self.context)))
    }

    fn blocks(&self, key: &'a str) -> Result<Vec<&'a Block>, SpecError> {
        self.block
            .get_all(key)
            .map(|v| {
                v.as_block()
                    .ok_or_else(|| invalid(format!("`{key}` in {} must be a block", self.context)))
            })
            .collect()
    }
}

fn scalar(name: &str) -> Result<Scalar, SpecError> {
    name.parse::<Scalar>()
        .map_err(|_| invalid(format!("unknown scalar_type `{name}`")))
}

fn type_from_block(block: &Block, context: &str, named: bool) -> Result<VarType, SpecError> {
    let tag = block
        .get("type")
        .and_then(Value::as_token)
        .ok_or_else(|| invalid(format!("missing `type` in {context}")))?;
    let mut allowed: Vec<&str> = vec!["type"];
    if named {
        allowed.push("name");
    }
    let ty = match tag {
        "TYPE_SCALAR" => {
            allowed.push("scalar_type");
            let f = Fields::new(block, context, &allowed)?;
            VarType::Scalar(scalar(f.string("scalar_type")?)?)
        }
        "TYPE_STRING" => {
            Fields::new(block, context, &allowed)?;
            VarType::String
        }
        "TYPE_VECTOR" => {
            allowed.push("vector_value");
            let f = Fields::new(block, context, &allowed)?;
            let elem = type_from_block(f.block("vector_value")?, context, false)?;
            VarType::Vector(Box::new(elem))
        }
        "TYPE_STRUCT" => {
            allowed.extend(["predefined_type", "struct_value"]);
            let f = Fields::new(block, context, &allowed)?;
            let name = f.string("predefined_type")?.to_string();
            let fields = f
                .blocks("struct_value")?
                .into_iter()
                .map(|b| var_from_block(b, &name))
                .collect::<Result<Vec<_>, _>>()?;
            VarType::Struct(StructSpec { name, fields })
        }
        "TYPE_ENUM" => {
            allowed.extend(["predefined_type", "enum_value"]);
            let f = Fields::new(block, context, &allowed)?;
            let name = f.string("predefined_type")?.to_string();
            let ev = Fields::new(
                f.block("enum_value")?,
                &name,
                &["scalar_type", "enumerator"],
            )?;
            let scalar = scalar(ev.string("scalar_type")?)?;
            let enumerators = ev
                .blocks("enumerator")?
                .into_iter()
                .map(|b| {
                    let en = Fields::new(b, &name, &["name", "value"])?;
                    let value = en
                        .token("value")?
                        .parse::<i64>()
                        .map_err(|_| invalid(format!("bad enumerator value in {name}")))?;
                    Ok((en.string("name")?.to_string(), value))
                })
                .collect::<Result<Vec<_>, SpecError>>()?;
            VarType::Enum(EnumSpec {
                name,
                scalar,
                enumerators,
            })
        }
        "TYPE_HIDL_INTERFACE" => {
            allowed.push("predefined_type");
            let f = Fields::new(block, context, &allowed)?;
            let fq: FqName = f
                .string("predefined_type")?
                .parse()
                .map_err(|e| invalid(format!("{e}")))?;
            VarType::Interface(fq)
        }
        other => return Err(SpecError::UnknownTypeTag(other.to_string())),
    };
    Ok(ty)
}

fn var_from_block(block: &Block, context: &str) -> Result<VarSpec, SpecError> {
    let name = block
        .get("name")
        .and_then(Value::as_str)
        .ok_or_else(|| invalid(format!("missing `name` in variable of {context}")))?;
    let ctx = format!("{context}.{name}");
    Ok(VarSpec::new(name, type_from_block(block, &ctx, true)?))
}

pub(crate) fn spec_from_block(doc: &Block) -> Result<InterfaceSpec, SpecError> {
    let top = Fields::new(
        doc,
        "spec",
        &["component_name", "package", "version", "interface"],
    )?;
    let component_name = top.string("component_name")?.to_string();
    let package = top.string("package")?.to_string();
    if !is_valid_package_name(&package) {
        return Err(invalid(format!("bad package name `{package}`")));
    }
    let version: Version = top
        .string("version")?
        .parse()
        .map_err(|e| invalid(format!("{e}")))?;
    let iface = Fields::new(top.block("interface")?, "interface", &["api"])?;
    let mut apis: Vec<ApiSpec> = Vec::new();
    for b in iface.blocks("api")? {
        let a = Fields::new(
            b,
            "api",
            &["name", "is_inherited", "oneway", "arg", "return_type_hidl"],
        )?;
        let name = a.string("name")?.to_string();
        if apis.iter().any(|x| x.name == name) {
            return Err(invalid(format!("api `{name}` declared twice")));
        }
        let args = a
            .blocks("arg")?
            .into_iter()
            .map(|v| var_from_block(v, &name))
            .collect::<Result<Vec<_>, _>>()?;
        let returns = a
            .blocks("return_type_hidl")?
            .into_iter()
            .map(|v| var_from_block(v, &name))
            .collect::<Result<Vec<_>, _>>()?;
        let oneway = a.boolean("oneway")?;
        if oneway && !returns.is_empty() {
            return Err(invalid(format!("oneway api `{name}` has return values")));
        }
        apis.push(ApiSpec {
            is_inherited: a.boolean("is_inherited")?,
            name,
            oneway,
            args,
            returns,
        });
    }
    Ok(InterfaceSpec {
        component_name,
        package,
        version,
        apis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bogus_type_tag_is_rejected() {
        let text = "component_name: \"IX\"\npackage: \"demo.x\"\nversion: \"1.0\"\ninterface: {\n  api: {\n    name: \"f\"\n    is_inherited: false\n    oneway: false\n    arg: {\n      name: \"a\"\n      type: TYPE_BOGUS\n    }\n  }\n}\n";
        assert_eq!(
            parse_spec_text(text),
            Err(SpecError::UnknownTypeTag("TYPE_BOGUS".into()))
        );
    }

    #[test]
    fn missing_and_unknown_fields_are_rejected() {
        assert!(matches!(
            parse_spec_text("component_name: \"IX\"\n"),
            Err(SpecError::Invalid(_))
        ));
        assert!(matches!(
            parse_spec_text(
                "component_name: \"IX\"\npackage: \"demo.x\"\nversion: \"1.0\"\ninterface: { }\nextra: 1\n"
            ),
            Err(SpecError::Invalid(_))
        ));
        assert!(matches!(
            parse_spec_text("component_name: {"),
            Err(SpecError::Syntax(_))
        ));
    }

    #[test]
    fn oneway_with_returns_is_invalid() {
        let text = "component_name: \"IX\"\npackage: \"demo.x\"\nversion: \"1.0\"\ninterface: {\n  api: {\n    name: \"f\"\n    is_inherited: false\n    oneway: true\n    return_type_hidl: {\n      name: \"a\"\n      type: TYPE_STRING\n    }\n  }\n}\n";
        assert!(matches!(parse_spec_text(text), Err(SpecError::Invalid(_))));
    }
}
