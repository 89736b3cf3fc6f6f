use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, OnceLock, RwLock};
use std::time::{Duration, Instant};

use spmt_core::engine::{dominant_reference, evaluate_output, reconstruct, synthesize, Reconstruction};
use spmt_core::io::{decode_image, decode_label_mask, encode_image};
use spmt_core::metrics::MetricReport;
use spmt_core::{Face, Settings, TransferRecipe};

use crate::error::ApiError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Source receives the reference's makeup.
    Transfer,
    /// Reference loses its makeup, with the source as the bare exemplar.
    Removal,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct CacheKey {
    ref_id: String,
    direction: Direction,
}

/// One config digest per (reference, direction). A different digest
/// replaces the entry.
struct CacheEntry {
    config: String,
    slot: Arc<OnceLock<Result<Arc<Reconstruction>, String>>>,
}

pub struct Reference {
    pub id: String,
    pub face: Face,
}

/// Decodes an uploaded image and label mask into a face.
pub fn decode_face(image: &[u8], mask: &[u8], settings: &Settings) -> Result<Face, ApiError> {
    let image = decode_image(image, Path::new("image")).map_err(ApiError::from_upload)?;
    let labels = decode_label_mask(mask, Path::new("mask")).map_err(ApiError::from_upload)?;
    Face::new(image, labels, settings).map_err(ApiError::from_upload)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Stats {
    pub correspondence_computations: u64,
    pub cache_hits: u64,
}

pub struct Rendered {
    pub png: Vec<u8>,
    pub report: MetricReport,
}

pub struct Session {
    pub id: String,
    source: Face,
    created: Instant,
    /// Nanoseconds after `created` of the last access.
    last_used: AtomicU64,
    references: RwLock<Vec<Arc<Reference>>>,
    cache: RwLock<HashMap<CacheKey, CacheEntry>>,
    computations: AtomicU64,
    hits: AtomicU64,
}

impl Session {
    pub fn new(id: String, source: Face) -> Self {
        Self {
            id,
            source,
            created: Instant::now(),
            last_used: AtomicU64::new(0),
            references: RwLock::new(Vec::new()),
            cache: RwLock::new(HashMap::new()),
            computations: AtomicU64::new(0),
            hits: AtomicU64::new(0),
        }
    }

    pub fn source(&self) -> &Face {
        &self.source
    }

    pub fn touch(&self) {
        let nanos = self.created.elapsed().as_nanos().min(u64::MAX as u128) as u64;
        self.last_used.fetch_max(nanos, Ordering::Relaxed);
    }

    pub fn last_used(&self) -> Instant {
        self.created + Duration::from_nanos(self.last_used.load(Ordering::Relaxed))
    }

    pub fn stats(&self) -> Stats {
        Stats {
            correspondence_computations: self.computations.load(Ordering::Relaxed),
            cache_hits: self.hits.load(Ordering::Relaxed),
        }
    }

    pub fn add_reference(&self, id: String, face: Face) -> Arc<Reference> {
        let r = Arc::new(Reference { id, face });
        self.references.write().expect("reference list").push(r.clone());
        r
    }

    /// The references named by `ids`, or all of them in upload order when
    /// `ids` is empty.
    pub fn resolve(&self, ids: &[String]) -> Result<Vec<Arc<Reference>>, ApiError> {
        let refs = self.references.read().expect("reference list");
        if ids.is_empty() {
            return Ok(refs.clone());
        }
        ids.iter()
            .map(|id| {
                refs.iter()
                    .find(|r| &r.id == id)
                    .cloned()
                    .ok_or_else(|| ApiError::unprocessable(format!("unknown reference {id}")))
            })
            .collect()
    }

    /// Cached reconstruction, computed on first use for this config.
    /// Concurrent callers for the same key wait on one computation.
    pub fn reconstruction(
        &self,
        reference: &Reference,
        direction: Direction,
        settings: &Settings,
    ) -> Result<Arc<Reconstruction>, ApiError> {
        let key = CacheKey {
            ref_id: reference.id.clone(),
            direction,
        };
        let config = settings.reconstruction_key();
        let cached = self
            .cache
            .read()
            .expect("cache")
            .get(&key)
            .filter(|e| e.config == config)
            .map(|e| e.slot.clone());
        let slot = match cached {
            Some(slot) => slot,
            None => {
                let mut cache = self.cache.write().expect("cache");
                let entry = cache.entry(key).or_insert_with(|| CacheEntry {
                    config: config.clone(),
                    slot: Arc::default(),
                });
                if entry.config != config {
                    log::debug!("session {}: config changed, dropping cached reconstruction", self.id);
                    *entry = CacheEntry {
                        config,
                        slot: Arc::default(),
                    };
                }
                entry.slot.clone()
            }
        };
        let mut computed = false;
        let result = slot.get_or_init(|| {
            computed = true;
            self.computations.fetch_add(1, Ordering::Relaxed);
            let run = match direction {
                Direction::Transfer => reconstruct(&self.source, &reference.face, settings),
                Direction::Removal => reconstruct(&reference.face, &self.source, settings),
            };
            run.map(Arc::new).map_err(|e| e.to_string())
        });
        if !computed {
            self.hits.fetch_add(1, Ordering::Relaxed);
        }
        result.clone().map_err(ApiError::internal)
    }

    /// Renders `recipe` from cached reconstructions and scores it.
    pub fn transfer(&self, recipe: &TransferRecipe, base: &Settings) -> Result<Rendered, ApiError> {
        let refs = self.resolve(&recipe.references)?;
        recipe.validate(refs.len()).map_err(ApiError::from_transfer)?;
        let settings = recipe.apply(base);
        settings.sac.validate().map_err(ApiError::from_transfer)?;
        let (out, report) = if recipe.removal {
            let made_up = &refs[0];
            let rec = self.reconstruction(made_up, Direction::Removal, &settings)?;
            let out = synthesize(&made_up.face, &[&rec], recipe, &settings).map_err(ApiError::from_transfer)?;
            let report = evaluate_output(&made_up.face, &self.source, &out, &settings);
            (out, report)
        } else {
            let recs = refs
                .iter()
                .map(|r| self.reconstruction(r, Direction::Transfer, &settings))
                .collect::<Result<Vec<_>, _>>()?;
            let views: Vec<&Reconstruction> = recs.iter().map(|r| r.as_ref()).collect();
            let out = synthesize(&self.source, &views, recipe, &settings).map_err(ApiError::from_transfer)?;
            let primary = &refs[dominant_reference(recipe, refs.len())];
            let report = evaluate_output(&self.source, &primary.face, &out, &settings);
            (out, report)
        };
        let report = report.map_err(ApiError::from_transfer)?;
        let png = encode_image(&out.image).map_err(ApiError::from_transfer)?;
        Ok(Rendered { png, report })
    }
}

/// Session map with idle eviction.
pub struct SessionStore {
    sessions: RwLock<HashMap<String, Arc<Session>>>,
    ttl: Duration,
}

impl SessionStore {
    pub fn new(ttl: Duration) -> Self {
        Self {
            sessions: RwLock::new(HashMap::new()),
            ttl,
        }
    }

    pub fn insert(&self, session: Session) -> Arc<Session> {
        let session = Arc::new(session);
        self.sessions
            .write()
            .expect("session map")
            .insert(session.id.clone(), session.clone());
        session
    }

    pub fn get(&self, id: &str) -> Option<Arc<Session>> {
        let s = self.sessions.read().expect("session map").get(id).cloned();
        if let Some(s) = &s {
            s.touch();
        }
        s
    }

    pub fn len(&self) -> usize {
        self.sessions.read().expect("session map").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Drops sessions idle for longer than the TTL as of `now`.
    pub fn evict_idle(&self, now: Instant) -> usize {
        let mut map = self.sessions.write().expect("session map");
        let before = map.len();
        map.retain(|_, s| now.saturating_duration_since(s.last_used()) <= self.ttl);
        let evicted = before - map.len();
        if evicted > 0 {
            log::info!("evicted {evicted} idle sessions");
        }
        evicted
    }
}
