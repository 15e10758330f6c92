//! Deterministic synthetic cohorts: planted-community forum logs with
//! grade-homogeneous communities.
//!
//! The generator is a pure function of the config. Randomness comes from
//! ChaCha8 seeded with the config's `seed`, and draws happen in a fixed,
//! documented order so every run of every build reproduces the same bytes:
//!
//! 1. one grade draw per student, in student-id order;
//! 2. per thread (communities in index order, threads in index order):
//!    one uniform draw for the seeding member, then one uniform draw per
//!    non-seeder student in id order deciding whether that student joins.
//!
//! Joining students post exactly once, in id order, with strictly
//! increasing timestamps; every non-seed post replies to the seed post.

use chrono::{TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{GradeScale, Participant, Post, PostLog, Role, Roster};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    InvalidConfig(String),
}

/// Planted-community cohort parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub community_count: usize,
    pub community_size: usize,
    pub threads_per_community: usize,
    /// Probability that a same-community member joins a thread.
    pub p_in: f64,
    /// Probability that an outside member joins a thread.
    pub p_out: f64,
    /// Per-community grade means; length must equal `community_count`.
    pub grade_means: Vec<f64>,
    pub grade_sd: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SynthConfig {
    fn validate(&self) -> Result<(), SynthError> {
        let fail = |msg: &str| Err(SynthError::InvalidConfig(msg.to_string()));
        if self.community_count == 0 {
            return fail("community_count must be positive");
        }
        if self.community_size == 0 {
            return fail("community_size must be positive");
        }
        if self.threads_per_community == 0 {
            return fail("threads_per_community must be positive");
        }
        if !(self.p_out >= 0.0 && self.p_out <= self.p_in && self.p_in <= 1.0) {
            return fail("probabilities must satisfy 0 <= p_out <= p_in <= 1");
        }
        if self.grade_means.len() != self.community_count {
            return fail("grade_means length must equal community_count");
        }
        if self.grade_means.iter().any(|m| !m.is_finite()) {
            return fail("grade_means must be finite");
        }
        if !(self.grade_sd.is_finite() && self.grade_sd >= 0.0) {
            return fail("grade_sd must be finite and nonnegative");
        }
        Ok(())
    }

    pub fn student_count(&self) -> usize {
        self.community_count * self.community_size
    }

    /// Planted community of a student index (students are numbered
    /// community-block-wise).
    pub fn community_of(&self, student_index: usize) -> usize {
        student_index / self.community_size
    }
}

/// Canonical student id: zero-padded so lexicographic and numeric order
/// agree.
pub fn student_id(index: usize) -> String {
    format!("s{index:05}")
}

fn thread_id(community: usize, thread: usize) -> String {
    format!("t{community:04}-{thread:04}")
}

/// Generate a synthetic cohort. Identical config (including seed) yields
/// byte-identical logs.
pub fn generate_cohort(cfg: &SynthConfig) -> Result<(PostLog, Roster), SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let scale = GradeScale::default();
    let student_count = cfg.student_count();

    let mut participants = Vec::with_capacity(student_count);
    for index in 0..student_count {
        let mean = cfg.grade_means[cfg.community_of(index)];
        let normal = Normal::new(mean, cfg.grade_sd)
            .map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
        let grade = normal.sample(&mut rng).clamp(scale.min, scale.max);
        participants.push(Participant {
            user_id: student_id(index),
            role: Role::Student,
            grade: Some(grade),
        });
    }
    let roster = Roster::new(participants, scale).expect("generated roster is valid");

    let base = Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap();
    let mut posts = Vec::new();
    for community in 0..cfg.community_count {
        for thread in 0..cfg.threads_per_community {
            let tid = thread_id(community, thread);
            let global_thread = community * cfg.threads_per_community + thread;
            let thread_base = base + chrono::Duration::hours(global_thread as i64);

            let seeder =
                community * cfg.community_size + rng.gen_range(0..cfg.community_size);
            let seed_post_id = format!("{tid}-p0000");
            posts.push(Post {
                post_id: seed_post_id.clone(),
                thread_id: tid.clone(),
                author_id: student_id(seeder),
                timestamp: thread_base,
                parent_post_id: None,
            });

            let mut position = 1;
            for student in 0..student_count {
                if student == seeder {
                    continue; // already posted; no draw
                }
                let p = if cfg.community_of(student) == community {
                    cfg.p_in
                } else {
                    cfg.p_out
                };
                if rng.gen::<f64>() < p {
                    posts.push(Post {
                        post_id: format!("{tid}-p{position:04}"),
                        thread_id: tid.clone(),
                        author_id: student_id(student),
                        timestamp: thread_base + chrono::Duration::minutes(position as i64),
                        parent_post_id: Some(seed_post_id.clone()),
                    });
                    position += 1;
                }
            }
        }
    }
    let log = PostLog::new(posts).expect("generated post ids are unique");
    Ok((log, roster))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_arcs, collapse_to_undirected, WeightingMode};
    use crate::ingest::{assemble_threads, write_posts_csv, write_roster_csv};

    fn config() -> SynthConfig {
        SynthConfig {
            community_count: 4,
            community_size: 15,
            threads_per_community: 12,
            p_in: 0.3,
            p_out: 0.01,
            grade_means: vec![55.0, 65.0, 75.0, 85.0],
            grade_sd: 5.0,
            seed: 7,
        }
    }

    #[test]
    fn roster_size_is_count_times_size() {
        let (_, roster) = generate_cohort(&config()).unwrap();
        assert_eq!(roster.students().count(), 60);
    }

    #[test]
    fn same_seed_gives_identical_bytes() {
        let (log_a, roster_a) = generate_cohort(&config()).unwrap();
        let (log_b, roster_b) = generate_cohort(&config()).unwrap();
        let mut bytes_a = Vec::new();
        let mut bytes_b = Vec::new();
        write_posts_csv(&log_a, &mut bytes_a).unwrap();
        write_posts_csv(&log_b, &mut bytes_b).unwrap();
        assert_eq!(bytes_a, bytes_b);
        bytes_a.clear();
        bytes_b.clear();
        write_roster_csv(&roster_a, &mut bytes_a).unwrap();
        write_roster_csv(&roster_b, &mut bytes_b).unwrap();
        assert_eq!(bytes_a, bytes_b);
    }

    #[test]
    fn different_seeds_differ() {
        let mut other = config();
        other.seed = 8;
        let (log_a, _) = generate_cohort(&config()).unwrap();
        let (log_b, _) = generate_cohort(&other).unwrap();
        assert_ne!(log_a, log_b);
    }

    #[test]
    fn no_cross_community_edges_when_p_out_is_zero() {
        let cfg = SynthConfig {
            p_out: 0.0,
            ..config()
        };
        let (log, roster) = generate_cohort(&cfg).unwrap();
        let threads = assemble_threads(&log).unwrap();
        let arcs = build_arcs(&threads, &roster, WeightingMode::PerThread, false).unwrap();
        let g = collapse_to_undirected(&arcs);
        for key in g.edges().keys() {
            let u: usize = key.min_end()[1..].parse().unwrap();
            let v: usize = key.max_end()[1..].parse().unwrap();
            assert_eq!(cfg.community_of(u), cfg.community_of(v), "{key}");
        }
    }

    #[test]
    fn every_thread_has_a_seed_post_and_valid_authors() {
        let (log, roster) = generate_cohort(&config()).unwrap();
        let threads = assemble_threads(&log).unwrap();
        assert_eq!(threads.thread_count(), 48);
        for posts in threads.threads().values() {
            assert!(!posts.is_empty());
            assert!(posts[0].parent_post_id.is_none());
            for post in posts {
                assert!(roster.get(&post.author_id).is_some());
            }
        }
    }

    #[test]
    fn grades_stay_in_scale() {
        let cfg = SynthConfig {
            grade_means: vec![2.0, 50.0, 98.0, 99.0],
            grade_sd: 30.0,
            ..config()
        };
        let (_, roster) = generate_cohort(&cfg).unwrap();
        for p in roster.students() {
            let grade = p.grade.unwrap();
            assert!((0.0..=100.0).contains(&grade));
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad_probability = SynthConfig {
            p_out: 0.5,
            p_in: 0.2,
            ..config()
        };
        assert!(generate_cohort(&bad_probability).is_err());
        let bad_means = SynthConfig {
            grade_means: vec![50.0],
            ..config()
        };
        assert!(generate_cohort(&bad_means).is_err());
        let zero_communities = SynthConfig {
            community_count: 0,
            grade_means: vec![],
            ..config()
        };
        assert!(generate_cohort(&zero_communities).is_err());
    }
}
