//! C ABI over the `glgcn` crate.
//!
//! Every function returns a [`GlgcnStatus`]; on failure a message is kept in
//! thread-local storage and can be read with [`glgcn_last_error_message`].
//! Objects cross the boundary as opaque handles that the caller releases
//! with the matching `*_free` function. Strings returned through out
//! parameters are owned by the caller and released with
//! [`glgcn_string_free`]. Panics never unwind into C; they surface as
//! [`GlgcnStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use glgcn::data_io::{load_checkpoint, save_checkpoint, six_node_fixture, write_dataset, FixtureSpec};
use glgcn::model::predict;
use glgcn::optim_train::{evaluate, gradcheck, gradcheck_config, train, Prepared};
use glgcn::{Dataset, Error, ModelParams, Split, TrainConfig, Variant};

/// Result code of every exported function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GlgcnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Data = 4,
    Shape = 5,
    NonFinite = 6,
    Checkpoint = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GlgcnSplit {
    Train = 0,
    Val = 1,
    Test = 2,
}

impl From<GlgcnSplit> for Split {
    fn from(s: GlgcnSplit) -> Self {
        match s {
            GlgcnSplit::Train => Split::Train,
            GlgcnSplit::Val => Split::Val,
            GlgcnSplit::Test => Split::Test,
        }
    }
}

/// Opaque dataset handle.
pub struct GlgcnDataset(Dataset);

/// Opaque trained-model handle: parameters plus the configuration that
/// produced them.
pub struct GlgcnModel {
    params: ModelParams,
    config: TrainConfig,
}

struct Failure {
    status: GlgcnStatus,
    msg: String,
}

impl Failure {
    fn new(status: GlgcnStatus, msg: impl Into<String>) -> Self {
        Failure {
            status,
            msg: msg.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidArgument(_) => GlgcnStatus::InvalidArgument,
            Error::MissingFile { .. } | Error::Io { .. } => GlgcnStatus::Io,
            Error::Parse { .. }
            | Error::IndexOutOfRange { .. }
            | Error::OverlappingSplits { .. }
            | Error::CountMismatch { .. }
            | Error::UnlabeledTrainingNode { .. } => GlgcnStatus::Data,
            Error::Shape { .. } => GlgcnStatus::Shape,
            Error::NonFinite { .. } => GlgcnStatus::NonFinite,
            Error::Checkpoint { .. } => GlgcnStatus::Checkpoint,
        };
        Failure::new(status, e.to_string())
    }
}

type Outcome = Result<(), Failure>;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    // interior NULs would truncate the C string; replace them
    let c = CString::new(msg.replace('\0', "?")).expect("NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Outcome) -> GlgcnStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GlgcnStatus::Ok,
        Ok(Err(failure)) => {
            set_last_error(&failure.msg);
            failure.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_last_error(&format!("panic: {msg}"));
            GlgcnStatus::Panic
        }
    }
}

unsafe fn arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::new(GlgcnStatus::NullPointer, format!("{name} is null")))
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure::new(GlgcnStatus::NullPointer, format!("{name} is null")))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(GlgcnStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(GlgcnStatus::InvalidArgument, format!("{name} is not valid UTF-8")))
}

fn to_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure::new(GlgcnStatus::InvalidArgument, "string contains NUL"))
}

fn parse_config(json: &str) -> Result<TrainConfig, Failure> {
    let config: TrainConfig = serde_json::from_str(json)
        .map_err(|e| Failure::new(GlgcnStatus::InvalidArgument, format!("config JSON: {e}")))?;
    config.validate()?;
    Ok(config)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn glgcn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL when the last
/// call succeeded. Valid until the next call into the library on the same
/// thread.
#[no_mangle]
pub extern "C" fn glgcn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn glgcn_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a dataset directory.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn glgcn_dataset_load(path: *const c_char, out_dataset: *mut *mut GlgcnDataset) -> GlgcnStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let slot = out(out_dataset, "out_dataset")?;
        let ds = glgcn::data_io::load_dataset(PathBuf::from(path))?;
        *slot = Box::into_raw(Box::new(GlgcnDataset(ds)));
        Ok(())
    })
}

/// Builds a bundled synthetic dataset: `"sbm2"` or `"six-node"`.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn glgcn_dataset_builtin(
    name: *const c_char,
    out_dataset: *mut *mut GlgcnDataset,
) -> GlgcnStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        let slot = out(out_dataset, "out_dataset")?;
        let ds = match name {
            "sbm2" => FixtureSpec::default().build()?,
            "six-node" => six_node_fixture(),
            other => {
                return Err(Failure::new(
                    GlgcnStatus::InvalidArgument,
                    format!("unknown builtin dataset {other:?} (expected sbm2 or six-node)"),
                ))
            }
        };
        *slot = Box::into_raw(Box::new(GlgcnDataset(ds)));
        Ok(())
    })
}

/// Writes a dataset in the directory format read by [`glgcn_dataset_load`].
///
/// # Safety
/// `dataset` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn glgcn_dataset_write(dataset: *const GlgcnDataset, path: *const c_char) -> GlgcnStatus {
    guard(|| {
        let ds = arg(dataset, "dataset")?;
        let path = str_arg(path, "path")?;
        write_dataset(&ds.0, PathBuf::from(path))?;
        Ok(())
    })
}

/// Releases a dataset handle. NULL is ignored.
///
/// # Safety
/// `dataset` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn glgcn_dataset_free(dataset: *mut GlgcnDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Node, feature and class counts; any out pointer may be NULL.
///
/// # Safety
/// `dataset` must be a live handle; non-NULL out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn glgcn_dataset_shape(
    dataset: *const GlgcnDataset,
    out_nodes: *mut usize,
    out_features: *mut usize,
    out_classes: *mut usize,
) -> GlgcnStatus {
    guard(|| {
        let ds = &arg(dataset, "dataset")?.0;
        for (p, v) in [
            (out_nodes, ds.num_nodes()),
            (out_features, ds.graph.num_features()),
            (out_classes, ds.num_classes()),
        ] {
            if let Some(slot) = p.as_mut() {
                *slot = v;
            }
        }
        Ok(())
    })
}

/// Number of nodes in a split.
///
/// # Safety
/// `dataset` must be a live handle; `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn glgcn_dataset_split_len(
    dataset: *const GlgcnDataset,
    split: GlgcnSplit,
    out_len: *mut usize,
) -> GlgcnStatus {
    guard(|| {
        let ds = &arg(dataset, "dataset")?.0;
        *out(out_len, "out_len")? = ds.split(split.into()).len();
        Ok(())
    })
}

/// The default training configuration as JSON.
///
/// # Safety
/// `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn glgcn_config_default_json(out_json: *mut *mut c_char) -> GlgcnStatus {
    guard(|| {
        let slot = out(out_json, "out_json")?;
        *slot = to_c_string(serde_json::to_string_pretty(&TrainConfig::default()).expect("config serializes"))?;
        Ok(())
    })
}

/// Trains one model. `config_json` may be NULL for the defaults; missing
/// fields take their default values. `out_report_json` may be NULL; when
/// set it receives the training report.
///
/// # Safety
/// `dataset` must be a live handle; `config_json` NULL or NUL-terminated;
/// `out_model` writable.
#[no_mangle]
pub unsafe extern "C" fn glgcn_train(
    dataset: *const GlgcnDataset,
    config_json: *const c_char,
    out_model: *mut *mut GlgcnModel,
    out_report_json: *mut *mut c_char,
) -> GlgcnStatus {
    guard(|| {
        let ds = &arg(dataset, "dataset")?.0;
        let config = if config_json.is_null() {
            TrainConfig::default()
        } else {
            parse_config(str_arg(config_json, "config_json")?)?
        };
        let slot = out(out_model, "out_model")?;
        let (params, report) = train(ds, &config)?;
        if let Some(report_slot) = out_report_json.as_mut() {
            *report_slot = to_c_string(serde_json::to_string(&report).expect("report serializes"))?;
        }
        *slot = Box::into_raw(Box::new(GlgcnModel { params, config }));
        Ok(())
    })
}

/// Releases a model handle. NULL is ignored.
///
/// # Safety
/// `model` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn glgcn_model_free(model: *mut GlgcnModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// The configuration a model was trained with, as JSON.
///
/// # Safety
/// `model` must be a live handle; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn glgcn_model_config_json(model: *const GlgcnModel, out_json: *mut *mut c_char) -> GlgcnStatus {
    guard(|| {
        let m = arg(model, "model")?;
        let slot = out(out_json, "out_json")?;
        *slot = to_c_string(serde_json::to_string_pretty(&m.config).expect("config serializes"))?;
        Ok(())
    })
}

/// Saves a model as a checkpoint file.
///
/// # Safety
/// `model` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn glgcn_model_save(model: *const GlgcnModel, path: *const c_char) -> GlgcnStatus {
    guard(|| {
        let m = arg(model, "model")?;
        let path = str_arg(path, "path")?;
        save_checkpoint(&m.params, &m.config, PathBuf::from(path))?;
        Ok(())
    })
}

/// Loads a checkpoint written by [`glgcn_model_save`] or the CLI.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out_model` writable.
#[no_mangle]
pub unsafe extern "C" fn glgcn_model_load(path: *const c_char, out_model: *mut *mut GlgcnModel) -> GlgcnStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let slot = out(out_model, "out_model")?;
        let ck = load_checkpoint(PathBuf::from(path))?;
        *slot = Box::into_raw(Box::new(GlgcnModel {
            params: ck.params,
            config: ck.config,
        }));
        Ok(())
    })
}

/// Classification accuracy on one split, in `[0, 1]`.
///
/// # Safety
/// `model` and `dataset` must be live handles; `out_accuracy` writable.
#[no_mangle]
pub unsafe extern "C" fn glgcn_evaluate(
    model: *const GlgcnModel,
    dataset: *const GlgcnDataset,
    split: GlgcnSplit,
    out_accuracy: *mut f64,
) -> GlgcnStatus {
    guard(|| {
        let m = arg(model, "model")?;
        let ds = &arg(dataset, "dataset")?.0;
        let slot = out(out_accuracy, "out_accuracy")?;
        *slot = evaluate(&m.params, ds, &m.config, split.into())?;
        Ok(())
    })
}

fn probabilities(m: &GlgcnModel, ds: &Dataset) -> Result<glgcn::DenseMatrix, Failure> {
    Ok(Prepared::new(ds, &m.config)?.infer(&m.params)?)
}

fn check_len(len: usize, expected: usize, what: &str) -> Outcome {
    if len == expected {
        Ok(())
    } else {
        Err(Failure::new(
            GlgcnStatus::InvalidArgument,
            format!("{what} buffer holds {len} values, expected {expected}"),
        ))
    }
}

/// Predicted class of every node. `len` must equal the node count.
///
/// # Safety
/// `model` and `dataset` must be live handles; `out_labels` must point to
/// `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn glgcn_predict(
    model: *const GlgcnModel,
    dataset: *const GlgcnDataset,
    out_labels: *mut usize,
    len: usize,
) -> GlgcnStatus {
    guard(|| {
        let m = arg(model, "model")?;
        let ds = &arg(dataset, "dataset")?.0;
        if out_labels.is_null() {
            return Err(Failure::new(GlgcnStatus::NullPointer, "out_labels is null"));
        }
        check_len(len, ds.num_nodes(), "out_labels")?;
        let labels = predict(&probabilities(m, ds)?);
        std::slice::from_raw_parts_mut(out_labels, len).copy_from_slice(&labels);
        Ok(())
    })
}

/// Class probabilities, row-major `nodes × classes`. `len` must equal
/// their product.
///
/// # Safety
/// `model` and `dataset` must be live handles; `out_probs` must point to
/// `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn glgcn_predict_proba(
    model: *const GlgcnModel,
    dataset: *const GlgcnDataset,
    out_probs: *mut f64,
    len: usize,
) -> GlgcnStatus {
    guard(|| {
        let m = arg(model, "model")?;
        let ds = &arg(dataset, "dataset")?.0;
        if out_probs.is_null() {
            return Err(Failure::new(GlgcnStatus::NullPointer, "out_probs is null"));
        }
        let z = probabilities(m, ds)?;
        check_len(len, z.as_slice().len(), "out_probs")?;
        std::slice::from_raw_parts_mut(out_probs, len).copy_from_slice(z.as_slice());
        Ok(())
    })
}

/// Largest relative error between analytic and central-difference
/// gradients for `variant` (`gcn`, `glgcn-f`, `glgcn-l`, `glgcn-fl`) on the
/// six-node fixture.
///
/// # Safety
/// `variant` must be a NUL-terminated string; `out_max_rel_error` writable.
#[no_mangle]
pub unsafe extern "C" fn glgcn_gradcheck(
    variant: *const c_char,
    epsilon: f64,
    out_max_rel_error: *mut f64,
) -> GlgcnStatus {
    guard(|| {
        let variant: Variant = str_arg(variant, "variant")?.parse().map_err(Failure::from)?;
        let slot = out(out_max_rel_error, "out_max_rel_error")?;
        *slot = gradcheck(&six_node_fixture(), &gradcheck_config(variant), epsilon)?.max_rel_error;
        Ok(())
    })
}
