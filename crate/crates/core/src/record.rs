//! Line-oriented text records and JSON documents for exchange maps and
//! periodic intervals. Rationals are written as `"p/q"`.

use crate::cem::Cem;
use crate::connections::PeriodicInterval;
use crate::error::{Error, Result};
use crate::iem::Iem;
use crate::perm::Permutation;
use crate::scalar::Coord;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeMap;

fn mode<T: Coord>() -> &'static str {
    if T::EXACT {
        "rational"
    } else {
        "float"
    }
}

fn texts<T: Coord>(v: &[T]) -> Vec<String> {
    v.iter().map(|x| x.to_text()).collect()
}

fn parse_all<T: Coord>(v: &[String]) -> Result<Vec<T>> {
    v.iter().map(|s| T::parse_text(s)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IemDoc {
    pub mode: String,
    pub perm: Vec<usize>,
    pub lengths: Vec<String>,
    pub omega: Vec<String>,
    pub left_endpoints: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CemDoc {
    pub mode: String,
    pub perm: Vec<usize>,
    pub lengths: Vec<String>,
    pub theta0: String,
    pub theta1: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodicIntervalDoc {
    pub left: String,
    pub right: String,
    pub period: usize,
    pub itinerary: Vec<usize>,
    pub symmetric_partner_offset: Option<usize>,
}

impl<T: Coord> Iem<T> {
    pub fn to_doc(&self) -> IemDoc {
        IemDoc {
            mode: mode::<T>().into(),
            perm: self.perm().final_order().to_vec(),
            lengths: texts(self.lengths()),
            omega: texts(self.omega()),
            left_endpoints: texts(self.left_endpoints()),
        }
    }

    /// Rebuilds the map from its permutation and lengths and checks the
    /// derived fields against the document.
    pub fn from_doc(doc: &IemDoc) -> Result<Self> {
        let iem = Iem::new(
            Permutation::new(doc.perm.clone())?,
            parse_all(&doc.lengths)?,
        )?;
        let omega: Vec<T> = parse_all(&doc.omega)?;
        let lefts: Vec<T> = parse_all(&doc.left_endpoints)?;
        let agree =
            |a: &[T], b: &[T]| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.same(y));
        if !agree(&omega, iem.omega()) || !agree(&lefts, iem.left_endpoints()) {
            return Err(Error::Parse(
                "omega or left_endpoints inconsistent with lengths".into(),
            ));
        }
        Ok(iem)
    }

    pub fn to_record(&self) -> String {
        let d = self.to_doc();
        format!(
            "iem mode={} perm={} lengths={} omega={} left_endpoints={}",
            d.mode,
            join(&d.perm),
            d.lengths.join(","),
            d.omega.join(","),
            d.left_endpoints.join(",")
        )
    }

    pub fn from_record(line: &str) -> Result<Self> {
        let f = fields(line, "iem")?;
        Self::from_doc(&IemDoc {
            mode: get(&f, "mode")?.to_string(),
            perm: indices(get(&f, "perm")?)?,
            lengths: list(get(&f, "lengths")?),
            omega: list(get(&f, "omega")?),
            left_endpoints: list(get(&f, "left_endpoints")?),
        })
    }
}

impl<T: Coord> Serialize for Iem<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_doc().serialize(s)
    }
}

impl<'de, T: Coord> Deserialize<'de> for Iem<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = IemDoc::deserialize(d)?;
        Iem::from_doc(&doc).map_err(serde::de::Error::custom)
    }
}

impl<T: Coord> Cem<T> {
    pub fn to_doc(&self) -> CemDoc {
        CemDoc {
            mode: mode::<T>().into(),
            perm: self.base().perm().final_order().to_vec(),
            lengths: texts(self.base().lengths()),
            theta0: self.theta0().to_text(),
            theta1: self.theta1().to_text(),
        }
    }

    pub fn from_doc(doc: &CemDoc) -> Result<Self> {
        Cem::new(
            Permutation::new(doc.perm.clone())?,
            parse_all(&doc.lengths)?,
            T::parse_text(&doc.theta0)?,
            T::parse_text(&doc.theta1)?,
        )
    }

    pub fn to_record(&self) -> String {
        let d = self.to_doc();
        format!(
            "cem mode={} perm={} lengths={} theta0={} theta1={}",
            d.mode,
            join(&d.perm),
            d.lengths.join(","),
            d.theta0,
            d.theta1
        )
    }

    pub fn from_record(line: &str) -> Result<Self> {
        let f = fields(line, "cem")?;
        Self::from_doc(&CemDoc {
            mode: get(&f, "mode")?.to_string(),
            perm: indices(get(&f, "perm")?)?,
            lengths: list(get(&f, "lengths")?),
            theta0: get(&f, "theta0")?.to_string(),
            theta1: get(&f, "theta1")?.to_string(),
        })
    }
}

impl<T: Coord> Serialize for Cem<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_doc().serialize(s)
    }
}

impl<'de, T: Coord> Deserialize<'de> for Cem<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = CemDoc::deserialize(d)?;
        Cem::from_doc(&doc).map_err(serde::de::Error::custom)
    }
}

impl<T: Coord> PeriodicInterval<T> {
    pub fn to_doc(&self) -> PeriodicIntervalDoc {
        PeriodicIntervalDoc {
            left: self.left.to_text(),
            right: self.right.to_text(),
            period: self.period,
            itinerary: self.itinerary.clone(),
            symmetric_partner_offset: self.symmetric_partner_offset,
        }
    }

    pub fn from_doc(doc: &PeriodicIntervalDoc) -> Result<Self> {
        if doc.itinerary.len() != doc.period {
            return Err(Error::Parse("itinerary length differs from period".into()));
        }
        Ok(Self {
            left: T::parse_text(&doc.left)?,
            right: T::parse_text(&doc.right)?,
            period: doc.period,
            itinerary: doc.itinerary.clone(),
            symmetric_partner_offset: doc.symmetric_partner_offset,
        })
    }

    pub fn to_record(&self) -> String {
        let d = self.to_doc();
        format!(
            "periodic_interval left={} right={} period={} itinerary={} symmetric_partner_offset={}",
            d.left,
            d.right,
            d.period,
            join(&d.itinerary),
            d.symmetric_partner_offset
                .map(|k| k.to_string())
                .unwrap_or_else(|| "none".into())
        )
    }

    pub fn from_record(line: &str) -> Result<Self> {
        let f = fields(line, "periodic_interval")?;
        let offset = match get(&f, "symmetric_partner_offset")? {
            "none" => None,
            s => Some(
                s.parse()
                    .map_err(|_| Error::Parse(format!("bad offset '{}'", s)))?,
            ),
        };
        Self::from_doc(&PeriodicIntervalDoc {
            left: get(&f, "left")?.to_string(),
            right: get(&f, "right")?.to_string(),
            period: get(&f, "period")?
                .parse()
                .map_err(|_| Error::Parse("bad period".into()))?,
            itinerary: indices(get(&f, "itinerary")?)?,
            symmetric_partner_offset: offset,
        })
    }
}

impl<T: Coord> Serialize for PeriodicInterval<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_doc().serialize(s)
    }
}

impl<'de, T: Coord> Deserialize<'de> for PeriodicInterval<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = PeriodicIntervalDoc::deserialize(d)?;
        PeriodicInterval::from_doc(&doc).map_err(serde::de::Error::custom)
    }
}

fn join(v: &[usize]) -> String {
    v.iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn list(s: &str) -> Vec<String> {
    if s.is_empty() {
        Vec::new()
    } else {
        s.split(',').map(str::to_string).collect()
    }
}

fn indices(s: &str) -> Result<Vec<usize>> {
    list(s)
        .iter()
        .map(|t| {
            t.parse()
                .map_err(|_| Error::Parse(format!("bad index '{}'", t)))
        })
        .collect()
}

fn fields<'a>(line: &'a str, tag: &str) -> Result<BTreeMap<&'a str, &'a str>> {
    let mut it = line.split_whitespace();
    if it.next() != Some(tag) {
        return Err(Error::Parse(format!("expected a '{}' record", tag)));
    }
    it.map(|kv| {
        kv.split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected key=value, got '{}'", kv)))
    })
    .collect()
}

fn get<'a>(f: &BTreeMap<&'a str, &'a str>, key: &str) -> Result<&'a str> {
    f.get(key)
        .copied()
        .ok_or_else(|| Error::Parse(format!("missing field '{}'", key)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connections::periodic_intervals;
    use crate::scalar::ratio;
    use num_rational::BigRational;

    fn four_reversed() -> Iem<BigRational> {
        Iem::new(
            Permutation::reversing(4),
            vec![
                ratio(14, 100),
                ratio(40, 100),
                ratio(10, 100),
                ratio(36, 100),
            ],
        )
        .unwrap()
    }

    #[test]
    fn iem_text_record() {
        let f = four_reversed();
        let line = f.to_record();
        assert_eq!(
            line,
            "iem mode=rational perm=4,3,2,1 lengths=7/50,2/5,1/10,9/25 \
             omega=43/50,8/25,-9/50,-16/25 left_endpoints=0,7/50,27/50,16/25"
        );
        assert_eq!(Iem::from_record(&line).unwrap(), f);
    }

    #[test]
    fn iem_json_round_trip() {
        let f = four_reversed();
        let json = serde_json::to_string(&f).unwrap();
        assert!(json.contains("\"lengths\":[\"7/50\""));
        let back: Iem<BigRational> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, f);
        let g = Iem::new(Permutation::reversing(3), vec![0.2, 0.5, 0.3]).unwrap();
        let back: Iem<f64> = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn tampered_documents_are_rejected() {
        let mut doc = four_reversed().to_doc();
        doc.omega[0] = "1/2".into();
        assert!(Iem::<BigRational>::from_doc(&doc).is_err());
        assert!(Iem::<BigRational>::from_record("cem mode=rational").is_err());
        assert!(Iem::<BigRational>::from_record("iem perm=1").is_err());
    }

    #[test]
    fn cem_round_trip() {
        let c = Cem::new(
            Permutation::reversing(3),
            vec![ratio(1, 5), ratio(1, 2), ratio(3, 10)],
            ratio(1, 4),
            ratio(3, 5),
        )
        .unwrap();
        assert_eq!(Cem::from_record(&c.to_record()).unwrap(), c);
        let back: Cem<BigRational> =
            serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn periodic_interval_round_trip() {
        for j in periodic_intervals(&four_reversed(), 3) {
            assert_eq!(PeriodicInterval::from_record(&j.to_record()).unwrap(), j);
            let json = serde_json::to_string(&j).unwrap();
            let back: PeriodicInterval<BigRational> = serde_json::from_str(&json).unwrap();
            assert_eq!(back, j);
        }
    }
}
