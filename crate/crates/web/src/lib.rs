//! Browser demo: one in-page session over the synthetic adhesive catalog.
//! Everything crosses the boundary as JSON text in the service's wire
//! format, so the page can reuse the same shapes.

use kbsel::adhesive::{build_kb, generate_synthetic_catalog, RequirementSchema};
use kbsel::consultant::{ConsultError, Consultant, OptimizeRequest, Session, SetRequest};
use kbsel::solve::{Budget, Direction};
use wasm_bindgen::prelude::*;

/// The session logic, free of JS types so it runs in native tests too.
pub struct Core {
    consultant: Consultant,
    session: Session,
}

#[derive(Debug, thiserror::Error)]
pub enum DemoError {
    #[error(transparent)]
    Consult(#[from] ConsultError),
    #[error("catalog: {0}")]
    Build(String),
    #[error("direction must be `minimize` or `maximize`, got `{0}`")]
    Direction(String),
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("wire types serialize")
}

impl Core {
    /// No time budget: bare wasm has no clock.
    pub fn new(seed: u64) -> Result<Core, DemoError> {
        let kb = build_kb(&generate_synthetic_catalog(seed), &RequirementSchema::standard())
            .map_err(|e| DemoError::Build(e.to_string()))?;
        let consultant = Consultant::new(kb, Budget::unlimited())?;
        let session = consultant.initial()?;
        Ok(Core { consultant, session })
    }

    pub fn schema(&self) -> String {
        json(&self.consultant.schema())
    }

    pub fn view(&self) -> String {
        json(&self.session.view)
    }

    pub fn set(&mut self, symbol: &str, value: &str) -> Result<String, DemoError> {
        let req = SetRequest { symbol: symbol.into(), args: vec![], value: value.into() };
        self.session = self.consultant.set(&self.session, &req)?;
        Ok(self.view())
    }

    pub fn retract(&mut self, symbol: &str) -> Result<String, DemoError> {
        self.session = self.consultant.retract(&self.session, symbol, &[])?;
        Ok(self.view())
    }

    pub fn explain(&self, symbol: &str) -> Result<String, DemoError> {
        Ok(json(&self.consultant.explain(&self.session, symbol, &[])?))
    }

    pub fn optimize(&self, symbol: &str, direction: &str) -> Result<String, DemoError> {
        let direction = match direction {
            "minimize" => Direction::Minimize,
            "maximize" => Direction::Maximize,
            other => return Err(DemoError::Direction(other.into())),
        };
        let req = OptimizeRequest { symbol: symbol.into(), direction };
        Ok(json(&self.consultant.optimize(&self.session, &req)?))
    }
}

#[wasm_bindgen]
pub struct Demo(Core);

fn js(e: DemoError) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32) -> Result<Demo, JsError> {
        Core::new(seed.into()).map(Demo).map_err(js)
    }

    pub fn schema(&self) -> String {
        self.0.schema()
    }

    pub fn view(&self) -> String {
        self.0.view()
    }

    pub fn set(&mut self, symbol: &str, value: &str) -> Result<String, JsError> {
        self.0.set(symbol, value).map_err(js)
    }

    pub fn retract(&mut self, symbol: &str) -> Result<String, JsError> {
        self.0.retract(symbol).map_err(js)
    }

    pub fn explain(&self, symbol: &str) -> Result<String, JsError> {
        self.0.explain(symbol).map_err(js)
    }

    pub fn optimize(&self, symbol: &str, direction: &str) -> Result<String, JsError> {
        self.0.optimize(symbol, direction).map_err(js)
    }
}
