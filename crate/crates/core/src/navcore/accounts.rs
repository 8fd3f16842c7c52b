use std::collections::BTreeMap;

use super::NavError;

pub type UserId = u64;

#[derive(Debug, Clone, PartialEq)]
pub struct UserAccount {
    pub user_id: UserId,
    pub username: String,
    pub registered: bool,
    pub email: Option<String>,
    pub phone_verified: bool,
    /// Passed a CAPTCHA or signed in through a third-party identity provider.
    pub captcha_passed: bool,
    pub points: u64,
    pub created_t: f64,
}

impl UserAccount {
    pub fn email_provided(&self) -> bool {
        self.email.is_some()
    }

    pub fn level(&self) -> Level {
        level_of(self.points)
    }

    pub fn award(&mut self, event: PointEvent) {
        award_points(self, event);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointEvent {
    /// One kilometer driven.
    DroveKm,
    FiledReport,
    ConfirmedReport,
}

impl PointEvent {
    pub fn points(self) -> u64 {
        match self {
            PointEvent::DroveKm => 1,
            PointEvent::FiledReport => 5,
            PointEvent::ConfirmedReport => 2,
        }
    }
}

pub fn award_points(account: &mut UserAccount, event: PointEvent) {
    account.points += event.points();
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Level {
    One = 1,
    Two = 2,
    Three = 3,
}

impl Level {
    pub fn weight(self) -> f64 {
        match self {
            Level::One => 1.0,
            Level::Two => 1.5,
            Level::Three => 2.0,
        }
    }

    pub fn number(self) -> u8 {
        self as u8
    }
}

/// Influence weight of anonymous (unregistered) sessions.
pub const ANONYMOUS_WEIGHT: f64 = 0.5;

pub fn level_of(points: u64) -> Level {
    match points {
        0..=99 => Level::One,
        100..=499 => Level::Two,
        _ => Level::Three,
    }
}

/// Reputation weight of a session's owner; anonymous sessions always get 0.5.
pub fn level_weight(account: Option<&UserAccount>) -> f64 {
    match account {
        Some(a) if a.registered => a.level().weight(),
        _ => ANONYMOUS_WEIGHT,
    }
}

/// Shape check only: `local@domain.tld`, no whitespace. Never verified.
pub fn is_well_formed_email(addr: &str) -> bool {
    if addr.chars().any(char::is_whitespace) {
        return false;
    }
    let Some((local, domain)) = addr.split_once('@') else {
        return false;
    };
    if local.is_empty() || domain.contains('@') {
        return false;
    }
    let labels: Vec<&str> = domain.split('.').collect();
    labels.len() >= 2 && labels.iter().all(|l| !l.is_empty())
}

#[derive(Debug, Clone, Default)]
pub struct AccountBook {
    accounts: Vec<UserAccount>,
    by_name: BTreeMap<String, UserId>,
}

impl AccountBook {
    pub fn register_user(
        &mut self,
        username: &str,
        email: &str,
        now: f64,
    ) -> Result<&mut UserAccount, NavError> {
        if self.by_name.contains_key(username) {
            return Err(NavError::DuplicateUsername(username.to_string()));
        }
        if !is_well_formed_email(email) {
            return Err(NavError::MalformedEmail(email.to_string()));
        }
        let user_id = self.accounts.len() as UserId;
        self.by_name.insert(username.to_string(), user_id);
        self.accounts.push(UserAccount {
            user_id,
            username: username.to_string(),
            registered: true,
            email: Some(email.to_string()),
            phone_verified: false,
            captcha_passed: false,
            points: 0,
            created_t: now,
        });
        Ok(&mut self.accounts[user_id as usize])
    }

    pub fn get(&self, id: UserId) -> Option<&UserAccount> {
        self.accounts.get(id as usize)
    }

    pub fn get_mut(&mut self, id: UserId) -> Option<&mut UserAccount> {
        self.accounts.get_mut(id as usize)
    }

    pub fn by_username(&self, name: &str) -> Option<&UserAccount> {
        self.by_name.get(name).and_then(|&id| self.get(id))
    }

    pub fn iter(&self) -> impl Iterator<Item = &UserAccount> {
        self.accounts.iter()
    }

    pub fn len(&self) -> usize {
        self.accounts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accounts.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registration_and_uniqueness() {
        let mut book = AccountBook::default();
        let acc = book.register_user("bot_7f3a", "a@b.c", 0.0).unwrap();
        assert!(acc.registered);
        assert_eq!(acc.points, 0);
        assert!(!acc.phone_verified);
        assert!(matches!(
            book.register_user("bot_7f3a", "x@y.z", 1.0),
            Err(NavError::DuplicateUsername(_))
        ));
        assert!(matches!(
            book.register_user("u", "not-an-email", 1.0),
            Err(NavError::MalformedEmail(_))
        ));
        assert_eq!(book.len(), 1);
    }

    #[test]
    fn email_shapes() {
        for ok in ["a@b.c", "first.last@campus.ac.il"] {
            assert!(is_well_formed_email(ok), "{ok}");
        }
        for bad in ["", "@b.c", "a@b", "a@@b.c", "a b@c.d", "a@.c", "a@b."] {
            assert!(!is_well_formed_email(bad), "{bad}");
        }
    }

    #[test]
    fn point_schedule() {
        let mut book = AccountBook::default();
        let acc = book.register_user("u", "u@x.io", 0.0).unwrap();
        for _ in 0..100 {
            acc.award(PointEvent::DroveKm);
        }
        assert_eq!(acc.points, 100);

        let acc = book.register_user("v", "v@x.io", 0.0).unwrap();
        acc.award(PointEvent::FiledReport);
        assert_eq!(acc.points, 5);
        acc.award(PointEvent::ConfirmedReport);
        assert_eq!(acc.points, 7);
    }

    #[test]
    fn level_table() {
        // (points, level, weight) boundaries
        let table = [
            (0, 1, 1.0),
            (99, 1, 1.0),
            (100, 2, 1.5),
            (499, 2, 1.5),
            (500, 3, 2.0),
            (10_000, 3, 2.0),
        ];
        for (points, level, weight) in table {
            let l = level_of(points);
            assert_eq!(l.number(), level, "points {points}");
            assert_eq!(l.weight(), weight);
        }
    }

    #[test]
    fn anonymous_weight() {
        assert_eq!(level_weight(None), 0.5);
        let mut acc = UserAccount {
            user_id: 0,
            username: "ghost".into(),
            registered: false,
            email: None,
            phone_verified: false,
            captcha_passed: false,
            points: 900,
            created_t: 0.0,
        };
        assert_eq!(level_weight(Some(&acc)), 0.5);
        acc.registered = true;
        assert_eq!(level_weight(Some(&acc)), 2.0);
    }
}
