use serde::{Deserialize, Serialize};

use super::AnnotatedVideo;

/// A rated segment expressed in snippet indices `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RasterSegment {
    pub start: usize,
    pub end: usize,
    pub rating: i8,
    pub repetitive: bool,
    /// True for gap fill that was not annotated.
    pub filler: bool,
}

impl RasterSegment {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    pub fn contains(&self, i: usize) -> bool {
        (self.start..self.end).contains(&i)
    }
}

/// Snippet-level view of a video's annotation: a partition of `0..n` into
/// rated segments.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub segments: Vec<RasterSegment>,
    /// Index into `segments` for every snippet.
    pub segment_of: Vec<usize>,
}

impl Raster {
    pub fn n_snippets(&self) -> usize {
        self.segment_of.len()
    }

    pub fn rating_of(&self, snippet: usize) -> i8 {
        self.segments[self.segment_of[snippet]].rating
    }

    /// True when all non-negative segments share one rating and none is
    /// repetitive or negative.
    pub fn has_constant_ratings(&self) -> bool {
        let mut ratings = self.segments.iter().map(|s| s.rating);
        let first = ratings.next();
        self.segments.iter().all(|s| !s.repetitive && s.rating >= 0) && ratings.all(|r| Some(r) == first)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Owner {
    Gap,
    Segment(usize),
}

const TIE_EPS: f64 = 1e-9;

/// Assigns each snippet to the segment covering most of its duration.
///
/// Uncovered time competes as a rating-0 filler. Ties go to the lower rating,
/// and filler wins a tie against a rating-0 segment. Consecutive filler
/// snippets merge into one filler segment.
pub fn rasterize_segments(video: &AnnotatedVideo) -> Raster {
    let n = video.n_snippets;
    let len = video.snippet_seconds;
    let segs = &video.segments;
    let mut owners = Vec::with_capacity(n);
    let mut first = 0;
    for j in 0..n {
        let lo = j as f64 * len;
        let hi = lo + len;
        while first < segs.len() && segs[first].end_sec <= lo {
            first += 1;
        }
        let mut best = Owner::Gap;
        let mut best_cover = 0.0;
        let mut best_rating = 0i8;
        let mut covered = 0.0;
        for (idx, s) in segs.iter().enumerate().skip(first) {
            if s.start_sec >= hi {
                break;
            }
            let cover = s.end_sec.min(hi) - s.start_sec.max(lo);
            if cover <= 0.0 {
                continue;
            }
            covered += cover;
            let better =
                cover > best_cover + TIE_EPS || ((cover - best_cover).abs() <= TIE_EPS && s.rating < best_rating);
            if best == Owner::Gap && best_cover == 0.0 || better {
                best = Owner::Segment(idx);
                best_cover = cover;
                best_rating = s.rating;
            }
        }
        let gap = (len - covered).max(0.0);
        if best != Owner::Gap {
            let gap_wins = gap > best_cover + TIE_EPS || ((gap - best_cover).abs() <= TIE_EPS && best_rating >= 0);
            if gap_wins {
                best = Owner::Gap;
            }
        }
        owners.push(best);
    }

    let mut segments: Vec<RasterSegment> = Vec::new();
    let mut segment_of = Vec::with_capacity(n);
    let mut prev: Option<Owner> = None;
    for (j, &owner) in owners.iter().enumerate() {
        if prev != Some(owner) {
            let (rating, repetitive, filler) = match owner {
                Owner::Gap => (0, false, true),
                Owner::Segment(i) => (segs[i].rating, segs[i].repetitive, false),
            };
            segments.push(RasterSegment {
                start: j,
                end: j,
                rating,
                repetitive,
                filler,
            });
            prev = Some(owner);
        }
        let last = segments.len() - 1;
        segments[last].end = j + 1;
        segment_of.push(last);
    }
    Raster { segments, segment_of }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::corpus::Segment;

    fn video(n: usize, segments: Vec<Segment>) -> AnnotatedVideo {
        AnnotatedVideo::new("v", 2.0, n, BTreeMap::new(), vec![], segments).unwrap()
    }

    #[test]
    fn exact_alignment() {
        let r = video(5, vec![Segment::new(0.0, 6.0, 2)]).rasterize();
        assert_eq!(r.segments[0].start..r.segments[0].end, 0..3);
        assert_eq!(r.segments[0].rating, 2);
        assert!(r.segments[1].filler);
        assert_eq!(r.segment_of, vec![0, 0, 0, 1, 1]);
    }

    #[test]
    fn half_covered_snippet_goes_to_filler() {
        let r = video(3, vec![Segment::new(0.0, 3.0, 2)]).rasterize();
        assert_eq!(r.rating_of(0), 2);
        assert_eq!(r.rating_of(1), 0);
        assert!(r.segments[r.segment_of[1]].filler);
    }

    #[test]
    fn half_covered_negative_snippet_stays_negative() {
        let r = video(3, vec![Segment::new(0.0, 3.0, -2)]).rasterize();
        assert_eq!(r.rating_of(1), -2);
        assert!(!r.segments[r.segment_of[1]].filler);
    }

    #[test]
    fn split_snippet_takes_lower_rating() {
        let r = video(2, vec![Segment::new(0.0, 1.0, 3), Segment::new(1.0, 4.0, 1)]).rasterize();
        assert_eq!(r.rating_of(0), 1);
        assert_eq!(r.segments.len(), 1);
    }

    #[test]
    fn no_segments_single_filler() {
        let r = video(7, vec![]).rasterize();
        assert_eq!(r.segments.len(), 1);
        assert_eq!(r.segments[0].len(), 7);
        assert!(r.segments[0].filler);
    }

    #[test]
    fn gaps_between_segments_are_filled() {
        let r = video(10, vec![Segment::new(2.0, 6.0, 3), Segment::new(10.0, 14.0, -1)]).rasterize();
        let lens: Vec<_> = r.segments.iter().map(|s| (s.len(), s.rating, s.filler)).collect();
        assert_eq!(
            lens,
            vec![(1, 0, true), (2, 3, false), (2, 0, true), (2, -1, false), (3, 0, true)]
        );
        assert_eq!(r.segments.iter().map(RasterSegment::len).sum::<usize>(), 10);
    }
}
