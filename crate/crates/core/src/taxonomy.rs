//! The crossroad-interaction taxonomy: five categories, a closed set of
//! entity classes, and a closed relation vocabulary.
//!
//! A [`Taxonomy`] is immutable once validated. The serializable
//! [`TaxonomyDocument`] is the on-disk shape; [`Taxonomy::from_document`]
//! checks every invariant before handing out a value.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::text::{normalize_class_token, normalize_relation_token};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CategoryId {
    FundamentalEntities,
    MotionDescriptors,
    IndividualBehaviors,
    SafetySituations,
    EnvironmentEntities,
}

impl CategoryId {
    pub const ALL: [CategoryId; 5] = [
        CategoryId::FundamentalEntities,
        CategoryId::MotionDescriptors,
        CategoryId::IndividualBehaviors,
        CategoryId::SafetySituations,
        CategoryId::EnvironmentEntities,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CategoryId::FundamentalEntities => "fundamental-entities",
            CategoryId::MotionDescriptors => "motion-descriptors",
            CategoryId::IndividualBehaviors => "individual-behaviors",
            CategoryId::SafetySituations => "safety-situations",
            CategoryId::EnvironmentEntities => "environment-entities",
        }
    }

    pub fn parse(raw: &str) -> Option<CategoryId> {
        let norm = normalize_relation_token(raw);
        CategoryId::ALL.into_iter().find(|c| c.as_str() == norm)
    }
}

impl fmt::Display for CategoryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How an entity of a class can be shown in the video.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Groundability {
    /// Moving agents, grounded through detector tracks.
    Dynamic,
    /// Infrastructure, grounded through layout masks.
    Static,
    /// Behaviors and situations with no direct visual footprint.
    Abstract,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyCategory {
    pub id: CategoryId,
    pub color: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyClass {
    pub id: String,
    pub category: CategoryId,
    pub attributes: Vec<String>,
    pub groundable_as: Groundability,
}

impl TaxonomyClass {
    /// The class id with underscores turned into spaces ("traffic light").
    pub fn display_name(&self) -> String {
        self.id.replace('_', " ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TaxonomyError {
    #[error("malformed taxonomy document: {0}")]
    Malformed(String),
    #[error("expected exactly 5 categories, found {0}")]
    CategoryCount(usize),
    #[error("unknown category `{0}`")]
    UnknownCategoryToken(String),
    #[error("category `{0}` declared twice")]
    DuplicateCategory(CategoryId),
    #[error("color `{0}` used by more than one category")]
    DuplicateColor(String),
    #[error("duplicate class id `{0}`")]
    DuplicateClass(String),
    #[error("class `{class}` references unknown category `{category}`")]
    UnknownCategory { class: String, category: String },
    #[error("class `{0}`: static grounding is reserved for environment-entities classes and required for them")]
    StaticMismatch(String),
    #[error("relations list is missing")]
    MissingRelations,
    #[error("relations list is empty")]
    EmptyRelations,
    #[error("unknown class `{0}`")]
    UnknownClass(String),
}

/// Serializable taxonomy shape with string-typed references, validated by
/// [`Taxonomy::from_document`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyDocument {
    pub categories: Vec<CategoryEntry>,
    pub classes: Vec<ClassEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relations: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryEntry {
    pub id: String,
    pub color: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassEntry {
    pub id: String,
    pub category: String,
    #[serde(default)]
    pub attributes: Vec<String>,
    pub groundable_as: Groundability,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Taxonomy {
    categories: Vec<TaxonomyCategory>,
    classes: Vec<TaxonomyClass>,
    relations: Vec<String>,
}

/// Okabe-Ito hues, assigned to categories in declaration order.
pub const DEFAULT_PALETTE: [&str; 5] = ["#E69F00", "#56B4E9", "#009E73", "#CC79A7", "#0072B2"];

pub const DEFAULT_RELATIONS: [&str; 7] =
    ["involves", "causes", "approaches", "yields-to", "conflicts-with", "exploits", "blocks"];

const DEFAULT_CLASSES: &[(&str, CategoryId, &[&str], Groundability)] = {
    use CategoryId::*;
    use Groundability::*;
    &[
        ("motorized_vehicle", FundamentalEntities, &["type", "color", "behavior"], Dynamic),
        ("pedestrian", FundamentalEntities, &["age", "location"], Dynamic),
        ("driver", FundamentalEntities, &["behavior"], Dynamic),
        ("trajectory", MotionDescriptors, &[], Abstract),
        ("acceleration", MotionDescriptors, &[], Abstract),
        ("deceleration", MotionDescriptors, &[], Abstract),
        ("stationary_state", MotionDescriptors, &[], Abstract),
        ("turning_intention", IndividualBehaviors, &[], Abstract),
        ("turning_movement", IndividualBehaviors, &[], Abstract),
        ("aggressive_behavior", IndividualBehaviors, &[], Abstract),
        ("crossing_intention", IndividualBehaviors, &[], Abstract),
        ("legal_crossing", IndividualBehaviors, &[], Abstract),
        ("illegal_crossing", IndividualBehaviors, &[], Abstract),
        ("gap_acceptance", SafetySituations, &[], Abstract),
        ("gap_rejection", SafetySituations, &[], Abstract),
        ("threat", SafetySituations, &[], Abstract),
        ("risk", SafetySituations, &[], Abstract),
        ("conflict", SafetySituations, &[], Abstract),
        ("crosswalk", EnvironmentEntities, &[], Static),
        ("sidewalk", EnvironmentEntities, &[], Static),
        ("traffic_light", EnvironmentEntities, &[], Static),
        ("traffic_sign", EnvironmentEntities, &[], Static),
        ("pole", EnvironmentEntities, &[], Static),
        ("catch_basin", EnvironmentEntities, &[], Static),
    ]
};

impl Default for Taxonomy {
    fn default() -> Self {
        Taxonomy::from_document(Taxonomy::default_document()).expect("bundled taxonomy is valid")
    }
}

impl Taxonomy {
    /// The bundled crossroad-interaction taxonomy as a document.
    pub fn default_document() -> TaxonomyDocument {
        TaxonomyDocument {
            categories: CategoryId::ALL
                .iter()
                .zip(DEFAULT_PALETTE)
                .map(|(id, color)| CategoryEntry { id: id.as_str().to_string(), color: color.to_string() })
                .collect(),
            classes: DEFAULT_CLASSES
                .iter()
                .map(|(id, cat, attrs, g)| ClassEntry {
                    id: id.to_string(),
                    category: cat.as_str().to_string(),
                    attributes: attrs.iter().map(|a| a.to_string()).collect(),
                    groundable_as: *g,
                })
                .collect(),
            relations: Some(DEFAULT_RELATIONS.iter().map(|r| r.to_string()).collect()),
        }
    }

    pub fn from_document(doc: TaxonomyDocument) -> Result<Taxonomy, TaxonomyError> {
        if doc.categories.len() != 5 {
            return Err(TaxonomyError::CategoryCount(doc.categories.len()));
        }
        let mut categories: Vec<TaxonomyCategory> = Vec::with_capacity(5);
        for entry in &doc.categories {
            let id = CategoryId::parse(&entry.id)
                .ok_or_else(|| TaxonomyError::UnknownCategoryToken(entry.id.clone()))?;
            if categories.iter().any(|c| c.id == id) {
                return Err(TaxonomyError::DuplicateCategory(id));
            }
            let color = entry.color.trim().to_lowercase();
            if color.is_empty() {
                return Err(TaxonomyError::Malformed(alloc::format!("category `{id}` has no color")));
            }
            if categories.iter().any(|c| c.color.to_lowercase() == color) {
                return Err(TaxonomyError::DuplicateColor(entry.color.clone()));
            }
            categories.push(TaxonomyCategory { id, color: entry.color.trim().to_string() });
        }

        let mut classes: Vec<TaxonomyClass> = Vec::with_capacity(doc.classes.len());
        for entry in &doc.classes {
            let id = normalize_class_token(&entry.id);
            if id.is_empty() {
                return Err(TaxonomyError::Malformed("class with empty id".to_string()));
            }
            if classes.iter().any(|c| c.id == id) {
                return Err(TaxonomyError::DuplicateClass(id));
            }
            let category = CategoryId::parse(&entry.category)
                .filter(|cat| categories.iter().any(|c| c.id == *cat))
                .ok_or_else(|| TaxonomyError::UnknownCategory {
                    class: id.clone(),
                    category: entry.category.clone(),
                })?;
            let is_env = category == CategoryId::EnvironmentEntities;
            if is_env != (entry.groundable_as == Groundability::Static) {
                return Err(TaxonomyError::StaticMismatch(id));
            }
            classes.push(TaxonomyClass {
                id,
                category,
                attributes: entry.attributes.iter().map(|a| normalize_class_token(a)).collect(),
                groundable_as: entry.groundable_as,
            });
        }

        let raw_relations = doc.relations.ok_or(TaxonomyError::MissingRelations)?;
        let mut relations: Vec<String> = Vec::new();
        for r in &raw_relations {
            let r = normalize_relation_token(r);
            if r.is_empty() {
                return Err(TaxonomyError::Malformed("empty relation label".to_string()));
            }
            if !relations.contains(&r) {
                relations.push(r);
            }
        }
        if relations.is_empty() {
            return Err(TaxonomyError::EmptyRelations);
        }

        Ok(Taxonomy { categories, classes, relations })
    }

    pub fn to_document(&self) -> TaxonomyDocument {
        TaxonomyDocument {
            categories: self
                .categories
                .iter()
                .map(|c| CategoryEntry { id: c.id.as_str().to_string(), color: c.color.clone() })
                .collect(),
            classes: self
                .classes
                .iter()
                .map(|c| ClassEntry {
                    id: c.id.clone(),
                    category: c.category.as_str().to_string(),
                    attributes: c.attributes.clone(),
                    groundable_as: c.groundable_as,
                })
                .collect(),
            relations: Some(self.relations.clone()),
        }
    }

    pub fn categories(&self) -> &[TaxonomyCategory] {
        &self.categories
    }

    pub fn classes(&self) -> &[TaxonomyClass] {
        &self.classes
    }

    pub fn relation_labels(&self) -> &[String] {
        &self.relations
    }

    /// Case-insensitive lookup; spaces and hyphens are accepted in place of
    /// underscores.
    pub fn resolve_class(&self, id: &str) -> Result<&TaxonomyClass, TaxonomyError> {
        let norm = normalize_class_token(id);
        self.classes.iter().find(|c| c.id == norm).ok_or_else(|| TaxonomyError::UnknownClass(id.to_string()))
    }

    pub fn category(&self, id: CategoryId) -> &TaxonomyCategory {
        // from_document guarantees all five are present
        self.categories.iter().find(|c| c.id == id).expect("validated taxonomy holds every category")
    }

    pub fn category_color(&self, class_id: &str) -> Result<&str, TaxonomyError> {
        let class = self.resolve_class(class_id)?;
        Ok(&self.category(class.category).color)
    }

    /// Normalized relation label if it belongs to the closed vocabulary.
    pub fn resolve_relation(&self, label: &str) -> Option<&str> {
        let norm = normalize_relation_token(label);
        self.relations.iter().find(|r| **r == norm).map(|r| r.as_str())
    }

    pub fn static_classes(&self) -> impl Iterator<Item = &TaxonomyClass> {
        self.classes.iter().filter(|c| c.groundable_as == Groundability::Static)
    }

    /// Human-readable terms for every class, used as enrichment terminology.
    pub fn terminology(&self) -> Vec<String> {
        self.classes.iter().map(|c| c.display_name()).collect()
    }
}
