//! External inference graphs (ONNX) run through tract.

use std::sync::Arc;

use tract_onnx::prelude::*;

use super::model::{sigmoid, GraphOutput, InputLayout, ModelCard};
use super::ClassifyError;
use crate::sampler::{ClipTensor, CLIP_CHANNELS, CLIP_LEN, CLIP_SIZE};

type Plan = Arc<TypedRunnableModel>;

pub(crate) struct GraphModel {
    plan: Plan,
    layout: InputLayout,
    output: GraphOutput,
}

fn load_err(e: impl std::fmt::Display) -> ClassifyError {
    ClassifyError::ModelLoad(e.to_string())
}

impl GraphModel {
    pub(crate) fn load(card: &ModelCard) -> Result<Self, ClassifyError> {
        let dims = card.input_layout.dims();
        let plan = tract_onnx::onnx()
            .model_for_path(&card.artifact)
            .map_err(|e| load_err(format!("{}: {e}", card.artifact.display())))?
            .with_input_fact(0, f32::fact(dims).into())
            .map_err(load_err)?
            .into_optimized()
            .map_err(load_err)?
            .into_runnable()
            .map_err(load_err)?;
        Ok(GraphModel {
            plan,
            layout: card.input_layout,
            output: card.output,
        })
    }

    fn input_tensor(&self, c: &ClipTensor) -> Result<Tensor, ClassifyError> {
        let expected = [CLIP_LEN, CLIP_SIZE, CLIP_SIZE, CLIP_CHANNELS];
        if c.shape() != expected {
            return Err(ClassifyError::ShapeMismatch {
                expected: expected.to_vec(),
                found: c.shape().to_vec(),
            });
        }
        let dims = self.layout.dims();
        let data = match self.layout {
            InputLayout::Nthwc => c.data.clone(),
            InputLayout::Ncthw => {
                let plane = CLIP_LEN * CLIP_SIZE * CLIP_SIZE;
                let mut out = vec![0f32; c.data.len()];
                for (p, px) in c.data.chunks_exact(CLIP_CHANNELS).enumerate() {
                    for (ch, &v) in px.iter().enumerate() {
                        out[ch * plane + p] = v;
                    }
                }
                out
            }
        };
        Tensor::from_shape(&dims, &data).map_err(|e| ClassifyError::Inference(e.to_string()))
    }

    pub(crate) fn prob(&self, c: &ClipTensor) -> Result<f64, ClassifyError> {
        let input = self.input_tensor(c)?;
        let outputs = self
            .plan
            .run(tvec!(input.into_tvalue()))
            .map_err(|e| ClassifyError::Inference(e.to_string()))?;
        let out = outputs
            .first()
            .ok_or_else(|| ClassifyError::Inference("graph produced no output".into()))?;
        let values: Vec<f64> = out
            .to_plain_array_view::<f32>()
            .map_err(|e| ClassifyError::Inference(e.to_string()))?
            .iter()
            .map(|&v| f64::from(v))
            .collect();
        match (self.output, values.as_slice()) {
            (GraphOutput::Logits, [z]) => Ok(sigmoid(*z)),
            // Two-way softmax, class 1 = HighVD.
            (GraphOutput::Logits, [z0, z1]) => Ok(sigmoid(z1 - z0)),
            (GraphOutput::Probabilities, [p]) => Ok(*p),
            (GraphOutput::Probabilities, [_, p1]) => Ok(*p1),
            (_, other) => Err(ClassifyError::Inference(format!(
                "expected 1 or 2 outputs per clip, got {}",
                other.len()
            ))),
        }
    }
}
