use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, NaiveTime, Weekday};

use super::world::{CalendarDefaults, CalendarError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeOfDay {
    /// 1..=12
    pub hour: u32,
    pub minute: u32,
    pub pm: bool,
}

impl TimeOfDay {
    pub fn to_naive(self) -> Result<NaiveTime, CalendarError> {
        if !(1..=12).contains(&self.hour) || self.minute > 59 {
            return Err(CalendarError::InvalidClause(format!(
                "invalid time {}:{:02} {}",
                self.hour,
                self.minute,
                if self.pm { "pm" } else { "am" }
            )));
        }
        let h24 = match (self.hour, self.pm) {
            (12, false) => 0,
            (12, true) => 12,
            (h, false) => h,
            (h, true) => h + 12,
        };
        Ok(NaiveTime::from_hms_opt(h24, self.minute, 0).expect("validated"))
    }
}

/// A date or time constraint on an event boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DateTimeClause {
    NextDow(Weekday),
    Today,
    Tomorrow,
    DateMdy { month: u32, day: u32, year: Option<i32> },
    Time(TimeOfDay),
}

impl DateTimeClause {
    fn is_time(&self) -> bool {
        matches!(self, DateTimeClause::Time(_))
    }
}

pub fn parse_weekday(word: &str) -> Option<Weekday> {
    Some(match word.to_lowercase().as_str() {
        "monday" | "mon" => Weekday::Mon,
        "tuesday" | "tue" => Weekday::Tue,
        "wednesday" | "wed" => Weekday::Wed,
        "thursday" | "thu" => Weekday::Thu,
        "friday" | "fri" => Weekday::Fri,
        "saturday" | "sat" => Weekday::Sat,
        "sunday" | "sun" => Weekday::Sun,
        _ => return None,
    })
}

/// The first date strictly after `today` falling on `weekday`.
pub(crate) fn next_dow(today: NaiveDate, weekday: Weekday) -> NaiveDate {
    let ahead = (weekday.num_days_from_monday() + 7 - today.weekday().num_days_from_monday()) % 7;
    let ahead = if ahead == 0 { 7 } else { ahead };
    today + Duration::days(ahead as i64)
}

fn resolve_date(clause: DateTimeClause, now: NaiveDateTime) -> Result<NaiveDate, CalendarError> {
    let today = now.date();
    match clause {
        DateTimeClause::NextDow(d) => Ok(next_dow(today, d)),
        DateTimeClause::Today => Ok(today),
        DateTimeClause::Tomorrow => Ok(today + Duration::days(1)),
        DateTimeClause::DateMdy { month, day, year } => {
            let invalid = || CalendarError::InvalidClause(format!("invalid date month={month} day={day}"));
            if !(1..=12).contains(&month) || !(1..=31).contains(&day) {
                return Err(invalid());
            }
            match year {
                Some(y) => NaiveDate::from_ymd_opt(y, month, day).ok_or_else(invalid),
                // Next occurrence on or after today; Feb 29 may need a leap year.
                None => (today.year()..today.year() + 8)
                    .filter_map(|y| NaiveDate::from_ymd_opt(y, month, day))
                    .find(|d| *d >= today)
                    .ok_or_else(invalid),
            }
        }
        DateTimeClause::Time(_) => unreachable!("time clauses are handled separately"),
    }
}

/// Resolves at most one date clause and at most one time clause into a
/// start and a default end. A missing date means `now`'s date, a missing
/// time means the default start time.
pub fn resolve_datetime(
    clauses: &[DateTimeClause],
    now: NaiveDateTime,
    defaults: &CalendarDefaults,
) -> Result<(NaiveDateTime, NaiveDateTime), CalendarError> {
    let start = resolve_point(clauses, now, None, defaults.start_time)?;
    Ok((start, start + Duration::minutes(defaults.duration_minutes)))
}

/// Resolves clauses to a single instant. `base_date` replaces `now`'s date
/// when the clauses carry no date of their own.
pub(crate) fn resolve_point(
    clauses: &[DateTimeClause],
    now: NaiveDateTime,
    base_date: Option<NaiveDate>,
    default_time: NaiveTime,
) -> Result<NaiveDateTime, CalendarError> {
    let dates: Vec<_> = clauses.iter().filter(|c| !c.is_time()).collect();
    let times: Vec<_> = clauses.iter().filter(|c| c.is_time()).collect();
    if dates.len() > 1 {
        return Err(CalendarError::ConflictingClauses(format!("{} date clauses", dates.len())));
    }
    if times.len() > 1 {
        return Err(CalendarError::ConflictingClauses(format!("{} time clauses", times.len())));
    }
    let date = match dates.first() {
        Some(c) => resolve_date(**c, now)?,
        None => base_date.unwrap_or_else(|| now.date()),
    };
    let time = match times.first() {
        Some(DateTimeClause::Time(t)) => t.to_naive()?,
        _ => default_time,
    };
    Ok(date.and_time(time))
}
