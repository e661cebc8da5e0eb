use serde::{Deserialize, Serialize};

use super::slot::{osf_counts, OsfCounts, OsfScore};
use super::{bleu, cider, epm, meteor_corpus, nist, rouge_l_corpus, ter_corpus, MetricError};
use crate::record::RecordSet;

/// Every corpus-level score for one evaluation run. `epm` and `osf` are
/// only present when the sources (and, for OSF, the text-to-data
/// reconstructions) were supplied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub bleu: f64,
    pub nist: f64,
    pub meteor: f64,
    pub rouge_l: f64,
    pub cider: f64,
    pub ter: f64,
    pub epm: Option<f64>,
    pub osf: Option<OsfScore>,
}

/// One evaluated item.
#[derive(Debug, Clone)]
pub struct EvalItem {
    pub candidate: String,
    pub references: Vec<String>,
    pub source: Option<RecordSet>,
    /// Outer `None`: no reconstruction was attempted. `Some(None)`: the
    /// text-to-data output could not be parsed.
    pub reconstructed: Option<Option<RecordSet>>,
}

impl MetricReport {
    pub fn compute(items: &[EvalItem]) -> Result<Self, MetricError> {
        if items.is_empty() {
            return Err(MetricError::EmptyCorpus);
        }
        let candidates: Vec<String> = items.iter().map(|i| i.candidate.clone()).collect();
        let references: Vec<Vec<String>> = items.iter().map(|i| i.references.clone()).collect();

        let epm_score = items
            .iter()
            .map(|i| i.source.as_ref().map(|x| epm(x, &i.candidate)))
            .collect::<Option<Vec<f64>>>()
            .map(|v| v.iter().sum::<f64>() / v.len() as f64);

        let mut osf_total = OsfCounts::default();
        let mut osf_complete = true;
        for item in items {
            match (&item.source, &item.reconstructed) {
                (Some(x), Some(rec)) => osf_total += osf_counts(x, rec.as_ref(), false)?,
                _ => osf_complete = false,
            }
        }

        Ok(MetricReport {
            bleu: bleu(&candidates, &references)?,
            nist: nist(&candidates, &references)?,
            meteor: meteor_corpus(&candidates, &references)?,
            rouge_l: rouge_l_corpus(&candidates, &references)?,
            cider: cider(&candidates, &references)?,
            ter: ter_corpus(&candidates, &references)?,
            epm: epm_score,
            osf: osf_complete.then(|| osf_total.score()),
        })
    }

    /// Copy with the 0–1 metrics rescaled to 0–100 for display.
    pub fn as_percent(&self) -> MetricReport {
        let pct = |v: f64| v * 100.0;
        MetricReport {
            bleu: pct(self.bleu),
            meteor: pct(self.meteor),
            rouge_l: pct(self.rouge_l),
            ter: pct(self.ter),
            epm: self.epm.map(pct),
            osf: self.osf.map(|o| OsfScore {
                precision: pct(o.precision),
                recall: pct(o.recall),
                f1: pct(o.f1),
            }),
            ..self.clone()
        }
    }

    /// Whether every score lies in its declared range.
    pub fn in_range(&self) -> bool {
        let unit = |v: f64| (0.0..=1.0 + 1e-12).contains(&v);
        unit(self.bleu)
            && unit(self.meteor)
            && unit(self.rouge_l)
            && self.epm.is_none_or(unit)
            && self
                .osf
                .is_none_or(|o| unit(o.precision) && unit(o.recall) && unit(o.f1))
            && self.ter >= 0.0
            && self.nist >= 0.0
            && (0.0..=10.0 + 1e-9).contains(&self.cider)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::{Record, RecordKind};

    fn item(c: &str, r: &str) -> EvalItem {
        EvalItem {
            candidate: c.into(),
            references: vec![r.into()],
            source: None,
            reconstructed: None,
        }
    }

    #[test]
    fn text_only_report() {
        let items = vec![
            item("alpha beta gamma delta", "alpha beta gamma delta"),
            item("one two three four five", "one two three four five"),
        ];
        let report = MetricReport::compute(&items).unwrap();
        assert!((report.bleu - 1.0).abs() < 1e-12);
        assert_eq!(report.ter, 0.0);
        assert!((report.cider - 10.0).abs() < 1e-9);
        assert!(report.epm.is_none() && report.osf.is_none());
        assert!(report.in_range());
        let pct = report.as_percent();
        assert!((pct.bleu - 100.0).abs() < 1e-9);
        assert_eq!(pct.cider, report.cider);
    }

    #[test]
    fn source_metrics_present_when_supplied() {
        let x = RecordSet::new(RecordKind::Tripleset, vec![Record::triple("A", "P", "B").unwrap()]).unwrap();
        let mut items = vec![item("A p B.", "A p B."), item("A p B.", "A p B.")];
        for it in &mut items {
            it.source = Some(x.clone());
            it.reconstructed = Some(Some(x.clone()));
        }
        let report = MetricReport::compute(&items).unwrap();
        assert_eq!(report.epm, Some(1.0));
        assert_eq!(report.osf.unwrap().f1, 1.0);
        assert!(matches!(MetricReport::compute(&[]), Err(MetricError::EmptyCorpus)));
    }
}
