use std::collections::HashSet;

use thiserror::Error;

use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::{is_valid_package_name, PackageId, Version};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{file}:{line}:{column}: syntax error: {message}")]
    Syntax {
        file: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{file}:{line}:{column}: duplicate declaration `{name}`")]
    DuplicateDecl {
        file: String,
        line: usize,
        column: usize,
        name: String,
    },
}

const KEYWORDS: &[&str] = &[
    "package",
    "import",
    "interface",
    "extends",
    "generates",
    "oneway",
    "struct",
    "enum",
    "vec",
];

fn is_reserved(word: &str) -> bool {
    KEYWORDS.contains(&word) || word == "string" || word.parse::<Scalar>().is_ok()
}

/// Parses every document of one package. All documents must declare `id`.
/// Declarations keep their source order, documents taken in the given order.
pub fn parse_package(sources: &[SourceFile], id: &PackageId) -> Result<PackageAst, ParseError> {
    let mut pkg = PackageAst {
        id: id.clone(),
        imports: Vec::new(),
        types: Vec::new(),
        interfaces: Vec::new(),
    };
    let mut names = HashSet::new();
    for src in sources {
        let tokens = lex(&src.text).map_err(|e| ParseError::Syntax {
            file: src.name.clone(),
            line: e.line,
            column: e.column,
            message: e.message,
        })?;
        let mut p = Parser {
            file: &src.name,
            tokens,
            pos: 0,
        };
        p.document(&mut pkg, &mut names)?;
    }
    Ok(pkg)
}

/// Reads the `package` line of a document without parsing the rest.
pub fn declared_package(src: &SourceFile) -> Result<PackageId, ParseError> {
    let tokens = lex(&src.text).map_err(|e| ParseError::Syntax {
        file: src.name.clone(),
        line: e.line,
        column: e.column,
        message: e.message,
    })?;
    let mut p = Parser {
        file: &src.name,
        tokens,
        pos: 0,
    };
    p.expect_keyword("package")?;
    p.package_id()
}

struct Parser<'a> {
    file: &'a str,
    tokens: Vec<Token>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn here(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, tok: &Token, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            file: self.file.to_string(),
            line: tok.line,
            column: tok.column,
            message: message.into(),
        }
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        self.error_at(self.here(), message)
    }

    fn duplicate(&self, tok: &Token, name: &str) -> ParseError {
        ParseError::DuplicateDecl {
            file: self.file.to_string(),
            line: tok.line,
            column: tok.column,
            name: name.to_string(),
        }
    }

    fn at_punct(&self, c: char) -> bool {
        *self.peek() == Tok::Punct(c)
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expect_punct(&mut self, c: char) -> Result<(), ParseError> {
        if self.at_punct(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected `{c}`, found {}", self.peek().describe())))
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.at_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected `{kw}`, found {}", self.peek().describe())))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Token), ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_reserved(&s) => Ok((s, self.bump())),
            Tok::Ident(s) => {
                Err(self.error(format!("reserved word `{s}` cannot be used as {what}")))
            }
            other => Err(self.error(format!("expected {what}, found {}", other.describe()))),
        }
    }

    fn int(&mut self) -> Result<u64, ParseError> {
        match *self.peek() {
            Tok::Int(n) => {
                self.bump();
                Ok(n)
            }
            ref other => Err(self.error(format!("expected integer, found {}", other.describe()))),
        }
    }

    fn version_component(&mut self) -> Result<u32, ParseError> {
        let tok = self.here().clone();
        let n = self.int()?;
        u32::try_from(n).map_err(|_| self.error_at(&tok, "version component out of range"))
    }

    fn package_id(&mut self) -> Result<PackageId, ParseError> {
        let start = self.here().clone();
        let mut name = match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                s
            }
            other => {
                return Err(self.error(format!("expected package name, found {}", other.describe())))
            }
        };
        while self.at_punct('.') {
            self.bump();
            match self.peek().clone() {
                Tok::Ident(s) => {
                    self.bump();
                    name.push('.');
                    name.push_str(&s);
                }
                other => {
                    return Err(
                        self.error(format!("expected name segment, found {}", other.describe()))
                    )
                }
            }
        }
        if !is_valid_package_name(&name) {
            return Err(self.error_at(
                &start,
                format!("package name `{name}` must use segments matching [a-z][a-z0-9_]*"),
            ));
        }
        self.expect_punct('@')?;
        let major = self.version_component()?;
        self.expect_punct('.')?;
        let minor = self.version_component()?;
        Ok(PackageId {
            name,
            version: Version::new(major, minor),
        })
    }

    fn document(
        &mut self,
        pkg: &mut PackageAst,
        names: &mut HashSet<String>,
    ) -> Result<(), ParseError> {
        let start = self.here().clone();
        self.expect_keyword("package")?;
        let id = self.package_id()?;
        if id != pkg.id {
            return Err(self.error_at(
                &start,
                format!("document declares package {id}, expected {}", pkg.id),
            ));
        }
        self.expect_punct(';')?;
        while self.at_keyword("import") {
            self.bump();
            let imp = self.package_id()?;
            self.expect_punct(';')?;
            if !pkg.imports.contains(&imp) {
                pkg.imports.push(imp);
            }
        }
        loop {
            match self.peek().clone() {
                Tok::Eof => return Ok(()),
                Tok::Ident(kw) if kw == "struct" => {
                    let (decl, tok) = self.struct_decl()?;
                    if !names.insert(decl.name.clone()) {
                        return Err(self.duplicate(&tok, &decl.name));
                    }
                    pkg.types.push(TypeDecl::Struct(decl));
                }
                Tok::Ident(kw) if kw == "enum" => {
                    let (decl, tok) = self.enum_decl()?;
                    if !names.insert(decl.name.clone()) {
                        return Err(self.duplicate(&tok, &decl.name));
                    }
                    pkg.types.push(TypeDecl::Enum(decl));
                }
                Tok::Ident(kw) if kw == "interface" => {
                    let (decl, tok) = self.interface_decl()?;
                    if !names.insert(decl.name.clone()) {
                        return Err(self.duplicate(&tok, &decl.name));
                    }
                    pkg.interfaces.push(decl);
                }
                Tok::Ident(kw) if kw == "import" => {
                    return Err(self.error("imports must precede declarations"))
                }
                other => {
                    return Err(self.error(format!(
                        "expected `struct`, `enum` or `interface`, found {}",
                        other.describe()
                    )))
                }
            }
        }
    }

    fn type_ref(&mut self) -> Result<TypeRef, ParseError> {
        let tok = self.here().clone();
        let word = match &tok.tok {
            Tok::Ident(s) => s.clone(),
            other => return Err(self.error(format!("expected type, found {}", other.describe()))),
        };
        if let Ok(scalar) = word.parse::<Scalar>() {
            self.bump();
            return Ok(TypeRef::Scalar(scalar));
        }
        match word.as_str() {
            "string" => {
                self.bump();
                Ok(TypeRef::String)
            }
            "vec" => {
                self.bump();
                self.expect_punct('<')?;
                let elem = self.type_ref()?;
                self.expect_punct('>')?;
                Ok(TypeRef::Vec(Box::new(elem)))
            }
            _ if matches!(self.peek_at(1), Tok::Punct('.') | Tok::Punct('@')) => {
                let package = self.package_id()?;
                if *self.peek() != Tok::ColonColon {
                    return Err(self.error("expected `::` after qualified package"));
                }
                self.bump();
                let (name, _) = self.ident("type name")?;
                Ok(TypeRef::Named(NamedRef {
                    package: Some(package),
                    name,
                }))
            }
            _ => {
                let (name, _) = self.ident("type name")?;
                Ok(TypeRef::Named(NamedRef {
                    package: None,
                    name,
                }))
            }
        }
    }

    fn named_ref(&mut self) -> Result<NamedRef, ParseError> {
        match self.type_ref()? {
            TypeRef::Named(n) => Ok(n),
            other => Err(self.error(format!("expected interface reference, found `{other}`"))),
        }
    }

    fn struct_decl(&mut self) -> Result<(StructDecl, Token), ParseError> {
        self.expect_keyword("struct")?;
        let (name, name_tok) = self.ident("struct name")?;
        self.expect_punct('{')?;
        let mut fields = Vec::new();
        let mut seen = HashSet::new();
        while !self.at_punct('}') {
            let ty = self.type_ref()?;
            let (fname, ftok) = self.ident("field name")?;
            self.expect_punct(';')?;
            if !seen.insert(fname.clone()) {
                return Err(self.duplicate(&ftok, &fname));
            }
            fields.push(Field::new(ty, fname));
        }
        self.expect_punct('}')?;
        self.expect_punct(';')?;
        Ok((StructDecl { name, fields }, name_tok))
    }

    fn enum_decl(&mut self) -> Result<(EnumDecl, Token), ParseError> {
        self.expect_keyword("enum")?;
        let (name, name_tok) = self.ident("enum name")?;
        self.expect_punct(':')?;
        let scalar_tok = self.here().clone();
        let underlying = match self.type_ref()? {
            TypeRef::Scalar(s) if s.is_integer() => s,
            other => {
                return Err(self.error_at(
                    &scalar_tok,
                    format!("enum underlying type must be an integer scalar, found `{other}`"),
                ))
            }
        };
        self.expect_punct('{')?;
        let mut variants = Vec::new();
        let mut seen = HashSet::new();
        while !self.at_punct('}') {
            let (vname, vtok) = self.ident("enumerator")?;
            if !seen.insert(vname.clone()) {
                return Err(self.duplicate(&vtok, &vname));
            }
            let value = if self.at_punct('=') {
                self.bump();
                let negative = if self.at_punct('-') {
                    self.bump();
                    true
                } else {
                    false
                };
                let lit_tok = self.here().clone();
                let n = self.int()? as i128;
                let v = if negative { -n } else { n };
                let v = i64::try_from(v)
                    .map_err(|_| self.error_at(&lit_tok, "enumerator value out of range"))?;
                Some(v)
            } else {
                None
            };
            variants.push(EnumVariant { name: vname, value });
            if self.at_punct(',') {
                self.bump();
            } else {
                break;
            }
        }
        self.expect_punct('}')?;
        self.expect_punct(';')?;
        if variants.is_empty() {
            return Err(self.error_at(&name_tok, format!("enum `{name}` declares no enumerators")));
        }
        Ok((
            EnumDecl {
                name,
                underlying,
                variants,
            },
            name_tok,
        ))
    }

    fn interface_decl(&mut self) -> Result<(InterfaceDecl, Token), ParseError> {
        self.expect_keyword("interface")?;
        let (name, name_tok) = self.ident("interface name")?;
        if !name.starts_with('I') {
            return Err(self.error_at(
                &name_tok,
                format!("interface name `{name}` must start with `I`"),
            ));
        }
        let extends = if self.at_keyword("extends") {
            self.bump();
            Some(self.named_ref()?)
        } else {
            None
        };
        self.expect_punct('{')?;
        let mut methods: Vec<MethodDecl> = Vec::new();
        while !self.at_punct('}') {
            let (m, tok) = self.method_decl()?;
            if methods.iter().any(|x| x.name == m.name) {
                return Err(self.duplicate(&tok, &m.name));
            }
            methods.push(m);
        }
        self.expect_punct('}')?;
        self.expect_punct(';')?;
        Ok((
            InterfaceDecl {
                name,
                extends,
                methods,
            },
            name_tok,
        ))
    }

    fn fields(&mut self) -> Result<Vec<Field>, ParseError> {
        self.expect_punct('(')?;
        let mut fields = Vec::new();
        let mut seen = HashSet::new();
        if !self.at_punct(')') {
            loop {
                let ty = self.type_ref()?;
                let (name, tok) = self.ident("parameter name")?;
                if !seen.insert(name.clone()) {
                    return Err(self.duplicate(&tok, &name));
                }
                fields.push(Field::new(ty, name));
                if self.at_punct(',') {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect_punct(')')?;
        Ok(fields)
    }

    fn method_decl(&mut self) -> Result<(MethodDecl, Token), ParseError> {
        let oneway = if self.at_keyword("oneway") {
            self.bump();
            true
        } else {
            false
        };
        let (name, name_tok) = self.ident("method name")?;
        let args = self.fields()?;
        let mut returns = Vec::new();
        if self.at_keyword("generates") {
            let gen_tok = self.here().clone();
            if oneway {
                return Err(self.error_at(
                    &gen_tok,
                    format!("oneway method `{name}` cannot declare return values"),
                ));
            }
            self.bump();
            returns = self.fields()?;
            if returns.is_empty() {
                return Err(self.error_at(&gen_tok, format!("method `{name}` generates no values")));
            }
        } else if !oneway {
            return Err(self.error(format!(
                "method `{name}` must be oneway or declare `generates (...)`"
            )));
        }
        self.expect_punct(';')?;
        Ok((
            MethodDecl {
                name,
                args,
                returns,
                oneway,
            },
            name_tok,
        ))
    }
}
