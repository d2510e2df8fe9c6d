use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{SecondsFormat, Utc};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LogLevel {
    Debug,
    Info,
    Warning,
    Error,
}

impl LogLevel {
    pub fn parse(text: &str) -> Option<LogLevel> {
        match text.to_ascii_lowercase().as_str() {
            "debug" => Some(LogLevel::Debug),
            "info" => Some(LogLevel::Info),
            "warning" | "warn" => Some(LogLevel::Warning),
            "error" => Some(LogLevel::Error),
            _ => None,
        }
    }
}

impl fmt::Display for LogLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LogLevel::Debug => "DEBUG",
            LogLevel::Info => "INFO",
            LogLevel::Warning => "WARNING",
            LogLevel::Error => "ERROR",
        })
    }
}

/// Writes `LEVEL timestamp [stage] message` lines to standard error and/or a
/// file. Safe to share between threads.
pub struct Logger {
    level: LogLevel,
    console: bool,
    file: Option<(PathBuf, Mutex<File>)>,
}

impl Logger {
    pub fn new(level: LogLevel, console: bool, file_path: Option<&Path>) -> std::io::Result<Logger> {
        let file = match file_path {
            Some(path) => {
                if let Some(dir) = path.parent() {
                    std::fs::create_dir_all(dir)?;
                }
                Some((path.to_path_buf(), Mutex::new(File::create(path)?)))
            }
            None => None,
        };
        Ok(Logger { level, console, file })
    }

    pub fn silent() -> Logger {
        Logger { level: LogLevel::Error, console: false, file: None }
    }

    pub fn file_path(&self) -> Option<&Path> {
        self.file.as_ref().map(|(p, _)| p.as_path())
    }

    pub fn log(&self, level: LogLevel, stage: &str, message: &str) {
        if level < self.level {
            return;
        }
        let line = format!("{level} {} [{stage}] {message}\n", Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true));
        if self.console {
            eprint!("{line}");
        }
        if let Some((_, file)) = &self.file {
            let mut file = file.lock().unwrap_or_else(|e| e.into_inner());
            let _ = file.write_all(line.as_bytes());
        }
    }

    pub fn debug(&self, stage: &str, message: &str) {
        self.log(LogLevel::Debug, stage, message);
    }

    pub fn info(&self, stage: &str, message: &str) {
        self.log(LogLevel::Info, stage, message);
    }

    pub fn warning(&self, stage: &str, message: &str) {
        self.log(LogLevel::Warning, stage, message);
    }

    pub fn error(&self, stage: &str, message: &str) {
        self.log(LogLevel::Error, stage, message);
    }

    pub fn flush(&self) {
        if let Some((_, file)) = &self.file {
            let mut file = file.lock().unwrap_or_else(|e| e.into_inner());
            let _ = file.flush();
        }
    }
}
